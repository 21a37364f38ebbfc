#pragma once

#include <string_view>

#include "sqvm/functions.hpp"
#include "sqvm/program.hpp"
#include "sqvm/sql.hpp"
#include "sqvm/storage.hpp"

namespace sqvm {

/// Emits a validated Program for one parsed statement. Unknown tables,
/// columns and functions raise BindError; CREATE TABLE of an existing name
/// raises SchemaError.
Program codegen(const sql::Statement &stmt, const Database &db, const FunctionCatalog &functions,
                std::string_view source_sql = {});

/// parse + codegen.
Program compile(std::string_view sql, const Database &db, const FunctionCatalog &functions);

}  // namespace sqvm
