#pragma once

#include <ostream>

namespace actsub::cli {

// Exit codes: 0 success, 2 usage or configuration error, 3 data or format
// error, 4 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace actsub::cli
