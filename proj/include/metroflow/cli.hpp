#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace metroflow::cli {

/**
 * Runs one subcommand: ingest, classify, assemble, train, bakeoff, ablate, regress,
 * correlate or synth. Returns 0 on success, 1 when the pipeline fails (or an ablation
 * scenario errored) and 2 on a usage error. One summary line per written artifact
 * goes to `out`; diagnostics go to `err`.
 */
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// argv form for main(); argv[0] is the program name.
int dispatch(int argc, char** argv);

}  // namespace metroflow::cli
