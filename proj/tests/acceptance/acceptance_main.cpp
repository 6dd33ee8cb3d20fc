// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff
// every selected criterion passes.
//
//   sscil_acceptance [--group properties|trends|all] [--only N[,M...]]
//                    [--work DIR] [--desk-config FILE] [--reuse] [--verbose]

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "acceptance.hpp"
#include "sscil/common/error.hpp"

namespace fs = std::filesystem;
using namespace sscil::acceptance;

#ifndef SSCIL_DESK_CONFIG
#define SSCIL_DESK_CONFIG ""
#endif

int main(int argc, char** argv) {
  CLI::App app{"sscil acceptance criteria"};
  std::string group = "all";
  std::vector<int> only;
  Context ctx;
  std::string work = (fs::temp_directory_path() / "sscil-acceptance").string();
  std::string desk = SSCIL_DESK_CONFIG;
  app.add_option("--group", group, "properties | trends | all")->check(CLI::IsMember({"properties", "trends", "all"}));
  app.add_option("--only", only, "Criterion ids")->delimiter(',');
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--desk-config", desk, "Run config for the trend runs");
  app.add_flag("--reuse", ctx.reuse, "Resume or reuse finished trend runs in the scratch directory");
  app.add_flag("--verbose", ctx.verbose, "Log run progress");
  CLI11_PARSE(app, argc, argv);
  ctx.work = fs::absolute(work);
  ctx.desk_config = desk;
  fs::create_directories(ctx.work);

  std::vector<Criterion> criteria;
  if (group != "trends") {
    for (auto& c : property_criteria(ctx)) criteria.push_back(std::move(c));
  }
  if (group != "properties") {
    for (auto& c : trend_criteria(ctx)) criteria.push_back(std::move(c));
  }
  const std::set<int> wanted(only.begin(), only.end());

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const sscil::Error& e) {
      v = {false, std::string("error ") + std::string(sscil::to_string(e.code())) + ": " + e.what()};
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %2d %-28s %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
