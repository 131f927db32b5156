#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

const std::string kCli = UNRN_CLI_PATH;

// Small enough that a full train run stays well under a second.
const std::string kSmallFlags =
    " --n_source_ids 5 --n_target_ids 6 --samples_per_id 12"
    " --intra_class_spread 0.05 --pretrain_epochs 2 --rounds 1"
    " --iters_per_epoch 5 --bank_capacity 64";

const std::string kSmallConf =
    "# mirrors kSmallFlags plus seed=3\n"
    "; both comment styles and blank lines are skipped\n"
    "\n"
    "seed = 3\n"
    "n_source_ids=5\n"
    "n_target_ids=6\n"
    "samples_per_id=12\n"
    "intra_class_spread=\"0.05\"\n"
    "pretrain_epochs=2\n"
    "rounds=1\n"
    "iters_per_epoch=5\n"
    "bank_capacity=64\n";

int run_cli(const std::string& args) {
  const int rc = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config file reproduces the equivalent flag run byte for byte") {
  write_text("/tmp/unrn_cli_small.conf", kSmallConf);
  REQUIRE(run_cli("train --quiet --seed 3" + kSmallFlags +
                  " --report /tmp/unrn_cli_flags.json") == 0);
  REQUIRE(run_cli("train --quiet --config /tmp/unrn_cli_small.conf"
                  " --report /tmp/unrn_cli_file.json") == 0);
  CHECK(slurp("/tmp/unrn_cli_flags.json") == slurp("/tmp/unrn_cli_file.json"));
}

TEST_CASE("command line flags override file values") {
  write_text("/tmp/unrn_cli_small.conf", kSmallConf);
  REQUIRE(run_cli("train --quiet --config /tmp/unrn_cli_small.conf --seed 7"
                  " --report /tmp/unrn_cli_mixed.json") == 0);
  REQUIRE(run_cli("train --quiet --seed 7" + kSmallFlags +
                  " --report /tmp/unrn_cli_seed7.json") == 0);
  CHECK(slurp("/tmp/unrn_cli_mixed.json") == slurp("/tmp/unrn_cli_seed7.json"));
}

TEST_CASE("config file keys reach subcommand specific options") {
  write_text("/tmp/unrn_cli_gen.conf",
             "n_source_ids=4\nn_target_ids=3\nsamples_per_id=10\n"
             "source_out=/tmp/unrn_cli_src.csv\ntarget_out=/tmp/unrn_cli_tgt.csv\n");
  std::remove("/tmp/unrn_cli_src.csv");
  std::remove("/tmp/unrn_cli_tgt.csv");
  REQUIRE(run_cli("generate --config /tmp/unrn_cli_gen.conf") == 0);
  const std::string src = slurp("/tmp/unrn_cli_src.csv");
  const std::string tgt = slurp("/tmp/unrn_cli_tgt.csv");
  CHECK(std::count(src.begin(), src.end(), '\n') == 41);
  CHECK(std::count(tgt.begin(), tgt.end(), '\n') == 31);
}

TEST_CASE("config file problems exit with status 2") {
  write_text("/tmp/unrn_cli_bad.conf", "totally_bogus_key=1\n");
  CHECK(run_cli("train --quiet --config /tmp/unrn_cli_bad.conf") == 2);

  write_text("/tmp/unrn_cli_bad.conf", "seed 3\n");
  CHECK(run_cli("train --quiet --config /tmp/unrn_cli_bad.conf") == 2);

  write_text("/tmp/unrn_cli_bad.conf", "config=/tmp/other.conf\n");
  CHECK(run_cli("train --quiet --config /tmp/unrn_cli_bad.conf") == 2);

  write_text("/tmp/unrn_cli_bad.conf", "sigma=not_a_number\n");
  CHECK(run_cli("train --quiet --config /tmp/unrn_cli_bad.conf") == 2);

  CHECK(run_cli("train --quiet --config /tmp/unrn_cli_absent.conf") == 2);
}

}
