#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// End-to-end checks against the installed binary; every command runs through
// /bin/sh with stdout/stderr captured to files.

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("errcons_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

RunResult run(const std::string& args, const std::string& env_prefix = "") {
  const fs::path out_file = scratch() / "stdout.txt";
  const fs::path err_file = scratch() / "stderr.txt";
  const std::string cmd = env_prefix + "'" + ERRCONS_CLI_PATH + "' " + args +
                          " > '" + out_file.string() + "' 2> '" +
                          err_file.string() + "'";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  const int exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return {exit_code, slurp(out_file), slurp(err_file)};
}

const char* kToyCsv =
    "observer_id,trial_id,is_correct\n"
    "alice,t1,true\n"
    "alice,t2,false\n"
    "alice,t3,true\n"
    "alice,t4,true\n"
    "bob,t1,true\n"
    "bob,t2,true\n"
    "bob,t3,false\n"
    "bob,t4,true\n"
    "cnn,t1,false\n"
    "cnn,t2,false\n"
    "cnn,t3,true\n"
    "cnn,t4,true\n";

const char* kGroupsJson =
    "{\"alice\": \"human\", \"bob\": \"human\", \"cnn\": \"model\"}\n";

fs::path toy_csv() {
  const fs::path p = scratch() / "toy.csv";
  spit(p, kToyCsv);
  return p;
}

fs::path groups_json() {
  const fs::path p = scratch() / "groups.json";
  spit(p, kGroupsJson);
  return p;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("cli: bounds prints one line per request") {
  const auto r = run("bounds --cexp 0.5 1 0.74");
  CHECK(r.exit_code == 0);
  CHECK(r.out ==
        "0 1 -1 1\n"
        "1 1 undefined undefined\n"
        "0.69282 1 -0.18146 1\n");
  CHECK(r.err.empty());

  const auto acc = run("bounds --acc 0.9,0.8");
  CHECK(acc.exit_code == 0);
  CHECK(acc.out == "0.7 0.9 -0.153846 0.615385\n");
}

TEST_CASE("cli: bounds keeps going after a bad value") {
  const auto r = run("bounds --cexp 1.5 0.5");
  CHECK(r.exit_code == 2);
  CHECK(r.out == "0 1 -1 1\n");  // the good value still prints
  CHECK(r.err == "error: chance agreement outside [0,1]: 1.5\n");
}

TEST_CASE("cli: bounds with nothing to do fails") {
  const auto r = run("bounds");
  CHECK(r.exit_code == 2);
  CHECK(r.err == "error: bounds needs --cexp or --acc values\n");
}

TEST_CASE("cli: usage errors exit 1, help exits 0") {
  CHECK(run("").exit_code == 1);
  CHECK(run("frobnicate").exit_code == 1);
  CHECK(run("analyze --input x.csv").exit_code == 1);  // --out missing
  CHECK(run("--help").exit_code == 0);
  CHECK(run("simulate --help").exit_code == 0);
}

TEST_CASE("cli: analyze writes the report files") {
  const fs::path outdir = scratch() / "report";
  const auto r = run("analyze --input " + q(toy_csv()) + " --groups " +
                     q(groups_json()) + " --out " + q(outdir));
  REQUIRE(r.exit_code == 0);
  CHECK(r.out ==
        "aligned 3 observers on 4 shared trials\n"
        "correctness: 12 rows explicit, 0 derived (0 judged incorrect)\n"
        "wrote scatter.csv, summary.json, accuracy.csv to " +
            outdir.string() + "\n");

  CHECK(slurp(outdir / "scatter.csv") ==
        "observer_a,observer_b,group,n,c_exp,c_obs,kappa,band_lo,band_hi\n"
        "alice,bob,human–human,4,0.625,0.5,-0.333333,,\n"
        "alice,cnn,human–model,4,0.5,0.75,0.5,,\n"
        "bob,cnn,human–model,4,0.5,0.25,-0.5,,\n");
  CHECK(slurp(outdir / "summary.json") ==
        "{\n"
        "  \"human–human\": {\n"
        "    \"mean_kappa\": -0.333333,\n"
        "    \"ci_lo\": null,\n"
        "    \"ci_hi\": null,\n"
        "    \"count\": 1,\n"
        "    \"excluded_undefined\": 0\n"
        "  },\n"
        "  \"human–model\": {\n"
        "    \"mean_kappa\": 0,\n"
        "    \"ci_lo\": -0.979982,\n"
        "    \"ci_hi\": 0.979982,\n"
        "    \"count\": 2,\n"
        "    \"excluded_undefined\": 0\n"
        "  }\n"
        "}\n");
  CHECK(slurp(outdir / "accuracy.csv") ==
        "observer_id,n,correct,accuracy\n"
        "alice,4,3,0.75\n"
        "bob,4,3,0.75\n"
        "cnn,4,2,0.5\n");
}

TEST_CASE("cli: analyze reports misalignment as a data error") {
  const fs::path gap = scratch() / "gap.csv";
  spit(gap,
       "observer_id,trial_id,is_correct\n"
       "alice,t1,true\n"
       "alice,t2,false\n"
       "bob,t1,true\n");
  const auto r = run("analyze --input " + q(gap) + " --groups " +
                     q(groups_json()) + " --out " + q(scratch() / "g2"));
  CHECK(r.exit_code == 2);
  CHECK(r.err ==
        "error: observer 'bob' has no record for trial 't2' "
        "(complete alignment required)\n");
}

TEST_CASE("cli: simulate is deterministic and thread-invariant") {
  const fs::path a = scratch() / "tabA.csv";
  const fs::path b = scratch() / "sub" / "tabB.csv";
  const fs::path c = scratch() / "tabC.csv";
  const fs::path d = scratch() / "tabD.csv";
  const std::string spec = "simulate --axis 30 --reps 2 --n 40 --seed 5 ";

  REQUIRE(run(spec + "--out " + q(a)).exit_code == 0);
  REQUIRE(run(spec + "--out " + q(b)).exit_code == 0);  // creates sub/
  CHECK(slurp(a) == slurp(b));

  const auto threaded = run(spec + "--out " + q(c), "ERRCONS_THREADS=3 ");
  REQUIRE(threaded.exit_code == 0);
  CHECK(slurp(a) == slurp(c));

  REQUIRE(run("simulate --axis 30 --reps 2 --n 40 --seed 6 --out " + q(d))
              .exit_code == 0);
  CHECK(slurp(a) != slurp(d));

  const auto cached = run(spec + "--out " + q(a));
  CHECK(cached.exit_code == 0);
  CHECK(cached.out == "reusing cached table '" + a.string() +
                          "' (1800 samples, 18 degenerate)\n");
}

TEST_CASE("cli: band tables attach to matching data only") {
  const fs::path tab4 = scratch() / "tab4.csv";
  const fs::path tab40 = scratch() / "tab40.csv";
  REQUIRE(run("simulate --axis 200 --reps 1 --n 4 --seed 5 --out " + q(tab4))
              .exit_code == 0);
  REQUIRE(run("simulate --axis 30 --reps 2 --n 40 --seed 5 --out " + q(tab40))
              .exit_code == 0);

  const fs::path outdir = scratch() / "banded";
  const auto ok = run("analyze --input " + q(toy_csv()) + " --groups " +
                      q(groups_json()) + " --band-table " + q(tab4) +
                      " --out " + q(outdir));
  REQUIRE(ok.exit_code == 0);
  CHECK(slurp(outdir / "scatter.csv") ==
        "observer_a,observer_b,group,n,c_exp,c_obs,kappa,band_lo,band_hi\n"
        "alice,bob,human–human,4,0.625,0.5,-0.333333,-0.333333,1\n"
        "alice,cnn,human–model,4,0.5,0.75,0.5,-0.5,0.5\n"
        "bob,cnn,human–model,4,0.5,0.25,-0.5,-0.5,0.5\n");

  const auto bad = run("analyze --input " + q(toy_csv()) + " --groups " +
                       q(groups_json()) + " --band-table " + q(tab40) +
                       " --out " + q(scratch() / "mismatch"));
  CHECK(bad.exit_code == 2);
  CHECK(bad.err ==
        "error: band table was simulated at n = 40 but the data has n = 4; "
        "bands are trial-count specific\n");
}
