// exitctl: solve | verify | simulate | hypotheses --config <path> --out <dir>

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "exitctl/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Exit-time optimal control: solve, verify, simulate, hypotheses"};
  app.require_subcommand(1, 1);
  std::string config, out = ".", candidate;
  for (const char* name : {"solve", "verify", "simulate", "hypotheses"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "run configuration file")->required();
    sub->add_option("--out", out, "output directory");
    if (std::string(name) == "verify") sub->add_option("--candidate", candidate, "candidate ValueField CSV");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exitctl::kExitInput;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  return exitctl::run_command(cmd, config, out, candidate, std::cout, std::cerr);
}
