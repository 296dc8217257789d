#pragma once

namespace preauction {

/// Entry point of the `preauction` command line tool. Subcommands: generate,
/// train, evaluate, ic-test, oracle-check, report; each takes --seed,
/// --config and --out. Returns the process exit code.
int run_cli(int argc, const char *const *argv);

}  // namespace preauction
