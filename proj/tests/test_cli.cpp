#include <unistd.h>
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "ssv/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ssvkit");
  std::ostringstream out, err;
  const int code = ssv::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("ssvkit-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const char* kVc8Row =
    "Test-1\t9.786%\nTest-2\t10.645%\nTest-3\t6.999%\nTest-4\t7.606%\nTest-5\t6.732%\nTest-6\t10.756%\n"
    "Test-7\t32.902%\nTest-8\t29.303%\nTest-9\t34.593%\nTest-10\t45.415%\nTest-11\t18.714%\nTest-12\t22.501%\n"
    "Test-13\t36.657%\nTest-14\t20.368%\nTest-15\t9.530%\nTest-16\t27.308%\n";

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == ssv::cli::kExitUsage);
  CHECK(run({"bogus"}).code == ssv::cli::kExitUsage);
  CHECK(run({"eer"}).code == ssv::cli::kExitUsage);
  CHECK(run({"eer", "--scores", "/nonexistent/file"}).code == ssv::cli::kExitUsage);
  CHECK(run({"report"}).code == ssv::cli::kExitUsage);
  CHECK(run({"gen-trials", "--manifest", "x", "--nope"}).code == ssv::cli::kExitUsage);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gen-trials") != std::string::npos);
}

TEST_CASE("eer on a separable fixture") {
  TempDir dir;
  write_file(dir / "s.tsv", "a\tb\t0.9\ttarget\nc\td\t0.8\ttarget\ne\tf\t0.1\tnontarget\ng\th\t0.2\tnontarget\n");
  const auto r = run({"eer", "--scores", dir / "s.tsv", "--det", dir / "det.tsv"});
  CHECK(r.code == 0);
  CHECK(r.out.find("EER 0.000%") != std::string::npos);
  CHECK(!slurp(dir / "det.tsv").empty());
}

TEST_CASE("eer on a malformed score file exits 1 with context") {
  TempDir dir;
  write_file(dir / "s.tsv", "a\tb\t0.9\ttarget\nc\td\tx\ttarget\n");
  const auto r = run({"eer", "--scores", dir / "s.tsv"});
  CHECK(r.code == ssv::cli::kExitDataError);
  CHECK(r.err.find("scorer") != std::string::npos);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("report reproduces the VC-8 Score") {
  TempDir dir;
  write_file(dir / "table.tsv", kVc8Row);
  const auto r = run({"report", "--eers", dir / "table.tsv", "--out", dir / "report.tsv"});
  CHECK(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  int rows = 0;
  std::string last;
  while (std::getline(lines, line)) {
    ++rows;
    last = line;
  }
  CHECK(rows == 17);
  CHECK(std::regex_match(last, std::regex("Score +20\\.613%")));
  CHECK(slurp(dir / "report.tsv").ends_with("Score\t20.613%\n"));
}

TEST_CASE("synthetic pipeline end to end") {
  TempDir dir;
  const auto synth = run({"synth", "--out", dir / "data", "--n-source", "6", "--n-target", "5", "--n-methods", "3",
                          "--utts-per-cell", "2", "--dim", "12", "--alpha", "0.9", "--sigma-noise", "0.2", "--seed", "4"});
  REQUIRE(synth.code == 0);
  const auto manifest = dir / "data/manifest.tsv";
  const auto speaker = dir / "data/speaker.ssve";
  const auto method = dir / "data/method.ssve";

  SUBCASE("trials are deterministic and validate") {
    const std::vector<std::string> args{"gen-trials", "--manifest", manifest, "--method", "vc001",
                                        "--per-scenario", "20", "--seed", "9"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out", dir / "a.tsv"});
    b.insert(b.end(), {"--out", dir / "b.tsv"});
    REQUIRE(run(a).code == 0);
    REQUIRE(run(b).code == 0);
    CHECK(slurp(dir / "a.tsv") == slurp(dir / "b.tsv"));
    const auto stdout_run = run(args);
    CHECK(stdout_run.out == slurp(dir / "a.tsv"));

    REQUIRE(run({"score", "--trials", dir / "a.tsv", "--embeddings", speaker, "--out", dir / "s1.tsv"}).code == 0);
    REQUIRE(run({"score", "--trials", dir / "a.tsv", "--embeddings", speaker, "--jobs", "4", "--out", dir / "s4.tsv"}).code == 0);
    CHECK(slurp(dir / "s1.tsv") == slurp(dir / "s4.tsv"));
    const auto eer = run({"eer", "--scores", dir / "s1.tsv"});
    CHECK(eer.code == 0);
    CHECK(eer.out.starts_with("EER "));

    const auto v = run({"validate", "--embeddings", speaker, "--manifest", manifest, "--trials", dir / "a.tsv",
                        "--scores", dir / "s1.tsv"});
    CHECK(v.code == 0);
    CHECK(v.err.empty());
  }

  SUBCASE("default per-scenario uses every available pair up to the cap") {
    const auto r = run({"gen-trials", "--manifest", manifest, "--method", "vc002"});
    CHECK(r.code == 0);
    // 6 sources x 5 targets x 2 utts: scenario 1 has 30 pairs, the minimum.
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4 * 30);
  }

  SUBCASE("infeasible request exits 1 and names the scenario") {
    const auto r = run({"gen-trials", "--manifest", manifest, "--method", "vc001", "--per-scenario", "31"});
    CHECK(r.code == ssv::cli::kExitDataError);
    CHECK(r.err.find("scenario 1") != std::string::npos);
    CHECK(r.err.find("max feasible 30") != std::string::npos);
  }

  SUBCASE("as-norm scoring") {
    REQUIRE(run({"gen-trials", "--manifest", manifest, "--per-scenario", "10", "--out", dir / "t.tsv"}).code == 0);
    const auto r = run({"score", "--trials", dir / "t.tsv", "--embeddings", speaker, "--cohort", speaker,
                        "--top-k", "20", "--out", dir / "n.tsv"});
    CHECK(r.code == 0);
    CHECK(run({"validate", "--scores", dir / "n.tsv"}).code == 0);
  }

  SUBCASE("osnn fit, calibrate, classify, evaluate") {
    REQUIRE(run({"synth", "--out", dir / "train", "--n-source", "6", "--n-target", "5", "--n-methods", "3",
                 "--utts-per-cell", "2", "--dim", "12", "--alpha", "0.9", "--sigma-noise", "0.2",
                 "--split", "train", "--seed", "4"}).code == 0);
    const auto tm = dir / "train/manifest.tsv";
    const auto te = dir / "train/method.ssve";
    REQUIRE(run({"osnn-fit", "--embeddings", te, "--manifest", tm, "--seed", "3", "--out", dir / "model.tsv"}).code == 0);
    const auto cal = run({"osnn-calibrate", "--model", dir / "model.tsv", "--embeddings", te, "--manifest", tm,
                          "--seed", "3", "--curve", dir / "curve.tsv"});
    CHECK(cal.code == 0);
    CHECK(cal.out.starts_with("threshold "));
    CHECK(!slurp(dir / "curve.tsv").empty());
    const auto cls = run({"osnn-classify", "--model", dir / "model.tsv", "--embeddings", method});
    CHECK(cls.code == 0);
    CHECK(std::count(cls.out.begin(), cls.out.end(), '\n') == 6 * 5 * 3 * 2);
    const auto ev = run({"osnn-eval", "--model", dir / "model.tsv", "--embeddings", method, "--manifest", manifest});
    CHECK(ev.code == 0);
    INFO(ev.out);
    std::smatch m;
    REQUIRE(std::regex_search(ev.out, m, std::regex("^seen accuracy ([0-9.]+)%")));
    CHECK(std::stod(m[1]) >= 85.0);
    CHECK(ev.out.find("unseen accuracy n/a") != std::string::npos);
    CHECK(run({"validate", "--model", dir / "model.tsv"}).code == 0);
  }

  SUBCASE("text format output validates too") {
    REQUIRE(run({"synth", "--out", dir / "txt", "--format", "text", "--n-methods", "2", "--alpha", "0.5"}).code == 0);
    CHECK(run({"validate", "--embeddings", dir / "txt/speaker.txt", "--manifest", dir / "txt/manifest.tsv"}).code == 0);
  }

  SUBCASE("validate flags a manifest mismatch") {
    write_file(dir / "short.tsv", "x\ts\tt\tm\ttest\n");
    const auto r = run({"validate", "--embeddings", speaker, "--manifest", dir / "short.tsv"});
    CHECK(r.code == ssv::cli::kExitDataError);
    CHECK(r.err.find("FAIL join") != std::string::npos);
  }
}

TEST_CASE("synth config file with flag override") {
  TempDir dir;
  write_file(dir / "c.cfg", "n_source_speakers=2\nn_target_speakers=2\nn_methods=1\nalpha=1\nsigma_noise=0\ndim=3\n");
  REQUIRE(run({"synth", "--config", dir / "c.cfg", "--dim", "5", "--out", dir / "o"}).code == 0);
  const auto r = run({"validate", "--embeddings", dir / "o/speaker.ssve", "--manifest", dir / "o/manifest.tsv"});
  CHECK(r.code == 0);
  std::ifstream in(dir / "o/speaker.ssve", std::ios::binary);
  in.seekg(8);
  unsigned char dim = 0;
  in.read(reinterpret_cast<char*>(&dim), 1);
  CHECK(dim == 5);
}
