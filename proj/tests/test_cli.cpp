#include "shapelift/geometry.hpp"
#include "shapelift/io.hpp"
#include "shapelift/synth.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using namespace shapelift;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_file = dir / "cli_stdout.txt";
  const fs::path err_file = dir / "cli_stderr.txt";
  const std::string cmd = std::string(SHAPELIFT_CLI_PATH) + " " + args + " >" +
                          out_file.string() + " 2>" + err_file.string();
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return {WEXITSTATUS(status), slurp(out_file), slurp(err_file)};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Writes one instance's landmarks and dictionary; returns the paths.
struct Fixture {
  fs::path dir;
  std::string landmarks;
  std::string dict;
  SyntheticInstance inst;
};

Fixture make_fixture(const std::string& name, int k, int p, int z,
                     std::uint64_t seed, SynthOptions opts = {}) {
  Fixture f;
  f.dir = fresh_dir(name);
  f.inst = synth_instance(k, p, z, seed, opts);
  f.landmarks = (f.dir / "w.csv").string();
  f.dict = (f.dir / "dict.json").string();
  io::write_landmarks_csv(f.landmarks, f.inst.w);
  io::write_dictionary_json(f.dict, f.inst.dict);
  return f;
}

}  // namespace

TEST_CASE("cli solve emits a full convex result") {
  const Fixture f = make_fixture("shapelift_cli_solve", 4, 12, 2, 71);
  const std::string out = (f.dir / "result.json").string();
  const CliResult r = run_cli("solve --landmarks " + f.landmarks + " --dict " +
                                  f.dict + " --method convex --out " + out,
                              f.dir);
  CHECK(r.code == 0);
  CHECK(r.err.empty());

  const json j = json::parse(slurp(out));
  CHECK(j.at("format_version") == 1);
  CHECK(j.at("method") == "convex");
  CHECK(j.at("k") == 4);
  CHECK(j.at("p") == 12);
  CHECK(j.at("coefficients").size() == 4);
  CHECK(j.at("rotations").size() == 4);
  for (const auto& rot : j.at("rotations")) CHECK(rot.size() == 9);
  CHECK(j.at("points").size() == 3 * 12);
  CHECK(j.at("objective").get<double>() > 0.0);
  CHECK(j.at("converged").is_boolean());
  REQUIRE(j.at("tightness").size() == 4);
  for (const auto& t : j.at("tightness")) CHECK(t.get<double>() >= 0.0);
}

TEST_CASE("cli solve reports altmin initialization source") {
  SynthOptions shared;
  shared.shared_rotation = true;
  const Fixture f = make_fixture("shapelift_cli_altmin", 3, 12, 2, 72, shared);

  const std::string cold = (f.dir / "cold.json").string();
  CliResult r = run_cli("solve --landmarks " + f.landmarks + " --dict " +
                            f.dict + " --method altmin --out " + cold,
                        f.dir);
  CHECK(r.code == 0);
  json j = json::parse(slurp(cold));
  CHECK(j.at("method") == "altmin");
  CHECK(j.at("init_source") == "mean_shape");
  CHECK(j.at("rotation").size() == 9);
  CHECK(j.at("coefficients").size() == 3);

  const std::string warm = (f.dir / "warm.json").string();
  r = run_cli("solve --landmarks " + f.landmarks + " --dict " + f.dict +
                  " --method altmin_warm --out " + warm,
              f.dir);
  CHECK(r.code == 0);
  j = json::parse(slurp(warm));
  CHECK(j.at("init_source") == "convex");
}

TEST_CASE("cli solve rejects mismatched inputs with exit code 2") {
  const Fixture f = make_fixture("shapelift_cli_mismatch", 3, 12, 1, 73);
  const Fixture other = make_fixture("shapelift_cli_mismatch2", 3, 15, 1, 74);
  const CliResult r =
      run_cli("solve --landmarks " + f.landmarks + " --dict " + other.dict +
                  " --method convex --out " + (f.dir / "o.json").string(),
              f.dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("error: ") != std::string::npos);
  CHECK(r.err.find("landmark count mismatch") != std::string::npos);
}

TEST_CASE("cli simulate writes byte-identical grids for a fixed seed") {
  const fs::path dir = fresh_dir("shapelift_cli_sim");
  const std::string flags =
      "simulate --p-list 12,16 --z-list 1 --k 4 --trials 2 --seed 7 --out ";
  const CliResult r1 = run_cli(flags + (dir / "g1.csv").string(), dir);
  CHECK(r1.code == 0);
  CHECK(r1.out.find("wrote 2 cells") != std::string::npos);
  const CliResult r2 = run_cli(flags + (dir / "g2.csv").string(), dir);
  CHECK(r2.code == 0);
  CHECK(slurp(dir / "g1.csv") == slurp(dir / "g2.csv"));
  CHECK(slurp(dir / "g1.csv").rfind(
            "p,z,trials,successes,frequency,mean_rel_error\n", 0) == 0);
}

TEST_CASE("cli evaluate scores a dataset directory") {
  const Fixture f = make_fixture("shapelift_cli_eval", 3, 12, 2, 75);
  const fs::path data = fresh_dir("shapelift_cli_eval_data");
  io::write_landmarks_csv((data / "item.landmarks.csv").string(), f.inst.w);
  io::write_shape_csv(
      (data / "item.gt.csv").string(),
      compose_shape(f.inst.dict, f.inst.true_coeffs, f.inst.true_rotations));

  const std::string out = (f.dir / "scores.csv").string();
  const CliResult r =
      run_cli("evaluate --dataset " + data.string() + " --dict " + f.dict +
                  " --methods convex --out " + out,
              f.dir);
  CHECK(r.code == 0);
  CHECK(r.out.find("convex mean error: ") != std::string::npos);
  CHECK(slurp(out).rfind("item,status,convex\n", 0) == 0);

  const fs::path empty = fresh_dir("shapelift_cli_eval_empty");
  const CliResult bad =
      run_cli("evaluate --dataset " + empty.string() + " --dict " + f.dict +
                  " --methods convex --out " + out,
              f.dir);
  CHECK(bad.code == 2);
  CHECK(bad.err.find("no items") != std::string::npos);
}

TEST_CASE("cli learn-dict fits and validates a shape corpus") {
  const fs::path shapes = fresh_dir("shapelift_cli_shapes");
  for (int i = 0; i < 6; ++i) {
    const SyntheticInstance inst = synth_instance(2, 10, 2, 80 + i);
    io::write_shape_csv(
        (shapes / ("s" + std::to_string(i) + ".csv")).string(),
        compose_shape(inst.dict, inst.true_coeffs, inst.true_rotations));
  }
  const fs::path dir = fresh_dir("shapelift_cli_learn");
  const std::string out = (dir / "learned.json").string();

  const CliResult r = run_cli("learn-dict --shapes " + shapes.string() +
                                  " --k 2 --max-iter 15 --out " + out,
                              dir);
  CHECK(r.code == 0);
  CHECK(r.out.find("final objective: ") != std::string::npos);
  const ShapeDictionary learned = io::read_dictionary_json(out);
  CHECK(learned.size() == 2);
  CHECK(learned.landmark_count() == 10);

  // Default k = 64 exceeds a six-shape corpus.
  const CliResult few = run_cli(
      "learn-dict --shapes " + shapes.string() + " --out " + out, dir);
  CHECK(few.code == 2);
  CHECK(few.err.find("too few shapes") != std::string::npos);

  std::ofstream(shapes / "broken.csv") << "x,y,z\n1,oops,3\n";
  const CliResult corrupt = run_cli(
      "learn-dict --shapes " + shapes.string() + " --k 2 --out " + out, dir);
  CHECK(corrupt.code != 0);
  CHECK(corrupt.err.find("broken.csv") != std::string::npos);
}

TEST_CASE("cli handles help and argument errors") {
  const fs::path dir = fresh_dir("shapelift_cli_misc");
  CHECK(run_cli("--help", dir).code == 0);
  CHECK(run_cli("solve --help", dir).code == 0);
  CHECK(run_cli("", dir).code != 0);
  CHECK(run_cli("frobnicate", dir).code == 2);
  CHECK(run_cli("solve --landmarks a --dict b --method sift --out c", dir)
            .code == 2);
  // Missing required --out.
  CHECK(run_cli("simulate", dir).code == 2);
}
