#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cfs/dataset.hpp"

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return CFS_CLI_PATH; }
const char* smoke_config() { return CFS_SMOKE_CONFIG; }

int run(const std::string& command_tail) {
  const std::string command =
      std::string(cli_path()) + " " + command_tail + " > /dev/null 2>&1";
  return std::system(command.c_str());
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void run_smoke_pipeline(const fs::path& dir) {
  const std::string cfg = std::string(" --config ") + smoke_config();
  const std::string dataset = (dir / "data.cfsd").string();
  REQUIRE(run("gen-data" + cfg + " --out " + dataset) == 0);
  REQUIRE(run("train" + cfg + " --dataset " + dataset + " --out " +
              (dir / "policy.ckpt").string()) == 0);
  for (const char* method : {"norm", "lasso", "tree", "ftest"}) {
    REQUIRE(run("baseline" + cfg + " --dataset " + dataset + " --method " +
                method + " --out " + (dir / (std::string(method) + ".mask")).string()) ==
            0);
  }
  REQUIRE(run("oracle" + cfg + " --dataset " + dataset + " --out " +
              (dir / "oracle.txt").string()) == 0);
  REQUIRE(run("evaluate" + cfg + " --dataset " + dataset + " --checkpoint " +
              (dir / "policy.ckpt").string() + " --out " +
              (dir / "eval").string() + " " + (dir / "norm.mask").string() +
              " " + (dir / "lasso.mask").string() + " " +
              (dir / "tree.mask").string() + " " +
              (dir / "ftest.mask").string()) == 0);
  REQUIRE(run("report " + (dir / "eval" / "report.json").string() + " --out " +
              (dir / "table.txt").string()) == 0);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("smoke pipeline runs end to end") {
  TempDir dir("cfs_cli_smoke");
  run_smoke_pipeline(dir.path);
  CHECK(fs::exists(dir.path / "eval" / "report.json"));
  CHECK(fs::exists(dir.path / "eval" / "report.txt"));
  CHECK(fs::exists(dir.path / "eval" / "series" / "rankcfs.csv"));
  CHECK(fs::exists(dir.path / "table.txt"));
  const std::string table = slurp(dir.path / "table.txt");
  CHECK(table.find("rankcfs") != std::string::npos);
  CHECK(table.find("all_factors") != std::string::npos);
}

TEST_CASE("report rendering is idempotent") {
  TempDir dir("cfs_cli_idempotent");
  const std::string cfg = std::string(" --config ") + smoke_config();
  const std::string dataset = (dir.path / "data.cfsd").string();
  REQUIRE(run("gen-data" + cfg + " --out " + dataset) == 0);
  REQUIRE(run("baseline" + cfg + " --dataset " + dataset +
              " --method ftest --out " + (dir.path / "f.mask").string()) == 0);
  REQUIRE(run("evaluate" + cfg + " --dataset " + dataset + " --out " +
              (dir.path / "eval").string() + " " +
              (dir.path / "f.mask").string()) == 0);
  REQUIRE(run("report " + (dir.path / "eval" / "report.json").string() +
              " --out " + (dir.path / "t1.txt").string()) == 0);
  REQUIRE(run("report " + (dir.path / "eval" / "report.json").string() +
              " --out " + (dir.path / "t2.txt").string()) == 0);
  CHECK(slurp(dir.path / "t1.txt") == slurp(dir.path / "t2.txt"));
}

TEST_CASE("mismatched checkpoint dimensions fail with a shape error") {
  TempDir dir("cfs_cli_mismatch");
  const std::string cfg = std::string(" --config ") + smoke_config();
  const std::string dataset = (dir.path / "data.cfsd").string();
  REQUIRE(run("gen-data" + cfg + " --out " + dataset) == 0);
  REQUIRE(run("train" + cfg + " --dataset " + dataset + " --out " +
              (dir.path / "p.ckpt").string()) == 0);

  // Regenerate with a different p; the checkpoint no longer matches.
  cfs::GenConfig other;
  other.num_page_views = 40;
  other.p = 5;
  other.l = 8;
  other.seed = 4;
  cfs::save_dataset(cfs::generate(other), dir.path / "other.cfsd");
  const std::string command = std::string(cli_path()) + " evaluate" + cfg +
                              " --dataset " + (dir.path / "other.cfsd").string() +
                              " --checkpoint " + (dir.path / "p.ckpt").string() +
                              " --out " + (dir.path / "eval").string() +
                              " 2> " + (dir.path / "stderr.txt").string() +
                              " > /dev/null";
  CHECK(std::system(command.c_str()) != 0);
  const std::string stderr_text = slurp(dir.path / "stderr.txt");
  CHECK(stderr_text.rfind("error:", 0) == 0);
}

TEST_CASE("missing files and bad configs fail cleanly") {
  TempDir dir("cfs_cli_errors");
  CHECK(run(std::string("train --config ") + smoke_config() +
            " --dataset /nonexistent.cfsd --out " +
            (dir.path / "x.ckpt").string()) != 0);

  const fs::path bad_config = dir.path / "bad.ini";
  std::ofstream(bad_config) << "[generation]\nmystery = 1\n";
  CHECK(run("gen-data --config " + bad_config.string() + " --out " +
            (dir.path / "d.cfsd").string()) != 0);
}

}  // TEST_SUITE
