#include "qerg/acceptance.hpp"
#include "qerg/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Acceptance battery"};
  int criterion = 0;
  std::uint64_t seed = 0;
  std::string group = "all";
  app.add_option("--criterion", criterion, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  app.add_option("--group", group, "algebra | dynamics | egorov | all");
  app.add_option("--seed", seed, "Seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const std::vector<int> ids = criterion > 0 ? std::vector<int>{criterion} : qerg::acceptance::group(group);
    bool all = true;
    for (int id : ids) {
      const auto r = qerg::acceptance::run_criterion(id, seed);
      std::cout << qerg::acceptance::format_line(r) << std::endl;
      all = all && r.pass;
    }
    return all ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qerg::harness::exit_code(e);
  }
}
