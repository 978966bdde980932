#pragma once
// Command-line front end: check, run, sweep, convergence, decay.
//
// Exit codes: 0 success (admissible / completed / decay pass),
// 1 inadmissible parameters or failed decay check, 2 usage, config or
// hypothesis errors, 3 blow-up suspected, 4 solver failure.

namespace ksfv {

int cli_main(int argc, const char* const* argv);

}  // namespace ksfv
