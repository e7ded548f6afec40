#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace macs {

// Subcommands: train, train-macs, joint-train, eval, ingest, sweep.
// Returns 0 on success, 1 on usage errors, 2 on runtime errors.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace macs
