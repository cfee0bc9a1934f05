#include <doctest.h>

#include <fstream>
#include <sstream>

#include "drifts/cli/commands.hpp"
#include "drifts/io.hpp"
#include "drifts/nifti.hpp"
#include "drifts/phantom.hpp"
#include "drifts/soup.hpp"
#include "../support/tmpdir.hpp"

using namespace drifts;
using namespace drifts::cli;

namespace {

int run(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "drifts");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  std::ostringstream o, e;
  const int rc = run_cli(int(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

void write_subject(const std::filesystem::path& dir, const std::string& id, std::uint64_t seed) {
  const Subject s = make_phantom({24, 24, 24}, {2, 2, 2}, seed, id);
  write_nifti(s.intensity, dir / (id + "_T2w.nii.gz"), true);
  write_nifti(s.labels, dir / (id + "_dseg.nii.gz"), true);
}

std::vector<unsigned char> bytes(const std::filesystem::path& p) { return read_file_bytes(p); }

}  // namespace

TEST_CASE("config parsing") {
  RunConfig cfg;
  apply_config(cfg, parse_ini("[generation]\nmode = randfabian\nseed = 9\n; note\n[run]\ncount = 4\n"
                              "[relaxometry]\nclass2_t1_min = 800\nclass2_t1_max = 900\n"));
  CHECK(cfg.generation.mode == GeneratorMode::RandFaBiAN);
  CHECK(cfg.generation.master_seed == 9);
  CHECK(cfg.count == 4);
  CHECK(cfg.generation.relaxometry.reference.at(2).t1 == Range{800, 900});

  RunConfig back;
  apply_config(back, dump_config(cfg));
  CHECK(dump_config(back) == dump_config(cfg));
  CHECK(parse_ini(to_ini(dump_config(cfg))) == dump_config(cfg));

  RunConfig bad;
  CHECK_THROWS_AS(apply_config(bad, {{"generation.nope", "1"}}), Error);
  CHECK_THROWS_AS(apply_config(bad, {{"run.count", "many"}}), Error);
  RunConfig zero;
  zero.count = 0;
  CHECK_THROWS_AS(zero.validate(), Error);
  CHECK(format_double(0.1) == "0.1");
  CHECK(parse_double_list("0, 0.5,1") == std::vector<double>{0, 0.5, 1});
}

TEST_CASE("subject discovery and naming") {
  TempDir dir("disc");
  write_subject(dir.path, "sub-02", 1);
  write_subject(dir.path, "sub-01", 0);
  std::ofstream(dir / "sub-03_T2w.nii") << "unpaired";
  const auto found = discover_subjects(dir.path, InputConfig{});
  REQUIRE(found.size() == 2);
  CHECK(found[0].id == "sub-01");
  CHECK(found[1].id == "sub-02");
  CHECK(sample_stem("sub-01", 7, 42) == "sub-01_s000007_seed42");
}

TEST_CASE("generate: worker count does not change bytes, sidecar replays") {
  TempDir in("in"), out1("o1"), out4("o4"), rep("rep");
  write_subject(in.path, "a", 0);
  write_subject(in.path, "b", 1);
  REQUIRE(run({"generate", "--input", in.path.string(), "--out", out1.path.string(), "--count", "2",
               "--seed", "5", "--workers", "1"}) == 0);
  REQUIRE(run({"generate", "--input", in.path.string(), "--out", out4.path.string(), "--count", "2",
               "--seed", "5", "--workers", "4"}) == 0);
  for (const char* stem : {"a_s000000_seed5", "b_s000001_seed5"}) {
    for (const char* kind : {"_image.nii.gz", "_labels.nii.gz", "_prov.json"}) {
      const std::string name = std::string(stem) + kind;
      CHECK_MESSAGE(bytes(out1 / name) == bytes(out4 / name), name);
    }
  }
  REQUIRE(run({"generate", "--replay", (out1 / "b_s000001_seed5_prov.json").string(), "--out",
               rep.path.string()}) == 0);
  CHECK(bytes(rep / "b_s000001_seed5_image.nii.gz") == bytes(out1 / "b_s000001_seed5_image.nii.gz"));
  CHECK(bytes(rep / "b_s000001_seed5_labels.nii.gz") == bytes(out1 / "b_s000001_seed5_labels.nii.gz"));
}

TEST_CASE("generate: empty input is a clean error") {
  TempDir in("empty"), base("base");
  const auto out = base / "never";
  std::string err;
  CHECK(run({"generate", "--input", in.path.string(), "--out", out.string()}, nullptr, &err) != 0);
  CHECK(err.rfind("error: code=EmptySample message=", 0) == 0);
  CHECK_FALSE(std::filesystem::exists(out));
}

TEST_CASE("generate: fifty samples per subject") {
  TempDir in("in50"), out("o50");
  const Subject s = make_phantom({12, 12, 12}, {4, 4, 4}, 0, "tiny");
  write_nifti(s.intensity, in / "tiny_T2w.nii", false);
  write_nifti(s.labels, in / "tiny_dseg.nii", false);
  REQUIRE(run({"generate", "--input", in.path.string(), "--out", out.path.string(), "--count", "50",
               "--profile", "simple"}) == 0);
  int images = 0;
  for (const auto& e : std::filesystem::directory_iterator(out.path))
    images += e.path().string().find("_image.nii.gz") != std::string::npos;
  CHECK(images == 50);
}

TEST_CASE("interpolate sweep endpoints equal the inputs") {
  TempDir dir("soup");
  Checkpoint a, b;
  a.tensors = {{"w", {2}, {1.0f, -2.0f}}};
  b.tensors = {{"w", {2}, {3.0f, 5.0f}}};
  write_checkpoint(a, (dir / "a.wsoup").string());
  write_checkpoint(b, (dir / "b.wsoup").string());
  REQUIRE(run({"interpolate", (dir / "a.wsoup").string(), (dir / "b.wsoup").string(), "--alphas",
               "0,1", "--out", (dir / "sweep").string()}) == 0);
  CHECK(bytes(dir / "sweep/soup_alpha0.wsoup") == bytes(dir / "a.wsoup"));
  CHECK(bytes(dir / "sweep/soup_alpha1.wsoup") == bytes(dir / "b.wsoup"));
  REQUIRE(run({"interpolate", (dir / "a.wsoup").string(), (dir / "b.wsoup").string(), "--alpha",
               "0.5", "--out", (dir / "mid.wsoup").string()}) == 0);
  CHECK(read_checkpoint((dir / "mid.wsoup").string()).tensors[0].data == std::vector<float>{2.0f, 1.5f});
  std::string err;
  CHECK(run({"interpolate", (dir / "a.wsoup").string(), (dir / "b.wsoup").string(), "--alpha", "2",
             "--out", (dir / "x.wsoup").string()}, nullptr, &err) != 0);
  CHECK(err.find("code=InvalidAlpha") != std::string::npos);
}

TEST_CASE("evaluate against itself gives unit dice") {
  TempDir dir("eval");
  write_subject(dir.path, "s1", 0);
  write_subject(dir.path, "s2", 1);
  std::ofstream(dir / "manifest.tsv") << "subject\tprediction\tground_truth\n"
                                      << "s1\ts1_dseg.nii.gz\ts1_dseg.nii.gz\n"
                                      << "s2\ts2_dseg.nii.gz\ts2_dseg.nii.gz\n";
  std::string out;
  REQUIRE(run({"evaluate", "--manifest", (dir / "manifest.tsv").string(), "--out",
               (dir / "report.tsv").string()}, &out) == 0);
  std::istringstream rows(out);
  std::string line;
  std::getline(rows, line);
  int checked = 0;
  while (std::getline(rows, line)) {
    std::istringstream f(line);
    std::string subject, label, d, h;
    std::getline(f, subject, '\t');
    std::getline(f, label, '\t');
    std::getline(f, d, '\t');
    std::getline(f, h, '\t');
    if (subject == "summary_std") continue;
    CHECK_MESSAGE(d == "1", line);
    ++checked;
  }
  CHECK(checked > 10);
  CHECK(std::filesystem::exists(dir / "report.tsv"));
}

TEST_CASE("epg with point intervals is deterministic") {
  TempDir dir("epg");
  write_subject(dir.path, "toy", 0);
  std::ofstream ini(dir / "epg.ini");
  ini << "[relaxometry]\n";
  for (int c = 1; c <= 7; ++c) {
    ini << "class" << c << "_t1_min = " << 800 + 100 * c << "\nclass" << c << "_t1_max = " << 800 + 100 * c
        << "\nclass" << c << "_t2_min = " << 60 + 20 * c << "\nclass" << c << "_t2_max = " << 60 + 20 * c
        << "\n";
  }
  ini.close();
  const std::string labels = (dir / "toy_dseg.nii.gz").string();
  REQUIRE(run({"epg", "--labels", labels, "--config", (dir / "epg.ini").string(), "--mode", "fabian",
               "--out", (dir / "r1.nii.gz").string()}) == 0);
  REQUIRE(run({"epg", "--labels", labels, "--config", (dir / "epg.ini").string(), "--mode", "fabian",
               "--out", (dir / "r2.nii.gz").string()}) == 0);
  CHECK(bytes(dir / "r1.nii.gz") == bytes(dir / "r2.nii.gz"));
  const Volume3D v = read_image(dir / "r1.nii.gz");
  CHECK(v.data().maxCoeff() > 0.0f);
}

TEST_CASE("bench and cluster-inspect run") {
  std::string out;
  REQUIRE(run({"bench", "--size", "24", "--count", "2", "--compare-epg"}, &out) == 0);
  CHECK(out.find("fetalsynthseg\t2\t") != std::string::npos);
  CHECK(out.find("randfabian\t2\t") != std::string::npos);

  TempDir dir("ci");
  write_subject(dir.path, "c", 0);
  REQUIRE(run({"cluster-inspect", "--image", (dir / "c_T2w.nii.gz").string(), "--labels",
               (dir / "c_dseg.nii.gz").string(), "--out", (dir / "sub.nii.gz").string()}, &out) == 0);
  CHECK(out.rfind("subclass\tclass", 0) == 0);
  CHECK(std::filesystem::exists(dir / "sub.nii.gz"));
}

TEST_CASE("usage errors") {
  std::string err;
  CHECK(run({}, nullptr, &err) != 0);
  CHECK(err.rfind("error: code=", 0) == 0);
  CHECK(run({"generate", "--out", "/tmp/x", "--mode", "bogus", "--input", "/nonexistent"}, nullptr, &err) != 0);
  CHECK(err.find("code=ConfigError") != std::string::npos);
  std::string out;
  CHECK(run({"--help"}, &out) == 0);
  CHECK(out.find("generate") != std::string::npos);
}
