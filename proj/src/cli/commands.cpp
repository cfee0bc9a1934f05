#include "drifts/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "drifts/io.hpp"
#include "drifts/labels.hpp"
#include "drifts/metrics.hpp"
#include "drifts/nifti.hpp"
#include "drifts/phantom.hpp"
#include "drifts/soup.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace drifts::cli {

namespace {

constexpr const char* kSidecarFormat = "drifts-provenance-1";

bool ends_with(const std::string& s, const std::string& tail) {
  return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

// Name without ".nii" / ".nii.gz"; empty when not a NIfTI name.
std::string nifti_stem(const std::string& name) {
  if (ends_with(name, ".nii.gz")) return name.substr(0, name.size() - 7);
  if (ends_with(name, ".nii")) return name.substr(0, name.size() - 4);
  return {};
}

json record_json(const ParamRecord& r) {
  json j = json::object();
  for (const auto& [k, v] : r) j[k] = v;
  return j;
}

json sidecar_json(const SamplePair& s, const SubjectFiles* files, const RunConfig& cfg,
                  const std::string& stem) {
  json j;
  j["format"] = kSidecarFormat;
  j["subject"] = s.provenance.subject;
  j["sample_index"] = s.provenance.sample_index;
  j["seed"] = s.provenance.seed;
  j["mode"] = std::string(to_string(s.provenance.mode));
  j["cluster_order"] = std::string(to_string(s.provenance.cluster_order));
  j["inputs"] = {{"image", files ? files->image.string() : ""},
                 {"labels", files ? files->labels.string() : ""}};
  j["outputs"] = {{"image", stem + "_image.nii.gz"}, {"labels", stem + "_labels.nii.gz"}};
  json config = json::object();
  for (const auto& [k, v] : dump_config(cfg))
    if (k != "run.workers") config[k] = v;
  j["config"] = config;
  j["params"] = record_json(s.provenance.params);
  j["warnings"] = s.provenance.warnings;
  return j;
}

void write_sample(const SamplePair& s, const SubjectFiles* files, const RunConfig& cfg,
                  const fs::path& out_dir) {
  const std::string stem =
      sample_stem(s.provenance.subject, s.provenance.sample_index, s.provenance.seed);
  write_nifti(s.image, out_dir / (stem + "_image.nii.gz"), true);
  write_nifti(s.labels, out_dir / (stem + "_labels.nii.gz"), true);
  write_text_atomic(out_dir / (stem + "_prov.json"),
                    sidecar_json(s, files, cfg, stem).dump(2) + "\n");
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  if (!path.empty()) apply_config(cfg, parse_ini_file(path));
  return cfg;
}

double percentile_of(std::vector<double> v, double q) {
  return v.empty() ? 0.0 : nearest_rank_percentile(std::move(v), q);
}

std::string quote_message(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

// ----------------------------------------------------------- commands --

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> count;
  std::string mode;
  std::string profile;
};

void add_common(CLI::App* app, CommonOpts& o) {
  app->add_option("--config", o.config, "config file (INI)");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--workers", o.workers, "worker threads");
  app->add_option("--count", o.count, "number of samples");
  app->add_option("--mode", o.mode, "synthseg | fetalsynthseg | fabian | randfabian");
  app->add_option("--profile", o.profile, "synthseg | simple");
}

RunConfig resolve(const CommonOpts& o) {
  RunConfig cfg = load_run_config(o.config);
  if (o.seed) cfg.generation.master_seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.count) cfg.count = *o.count;
  if (!o.mode.empty()) cfg.generation.mode = generator_mode_from_string(o.mode);
  if (!o.profile.empty()) cfg.generation.profile = augment_profile_from_string(o.profile);
  cfg.validate();
  return cfg;
}

void cmd_generate(const CommonOpts& common, const std::string& input, const std::string& out,
                  const std::string& replay, bool continue_on_error, std::ostream& os) {
  if (!replay.empty()) {
    const std::vector<unsigned char> bytes = read_file_bytes(replay);
    json j;
    try {
      j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, std::string("bad sidecar: ") + e.what());
    }
    if (j.value("format", "") != kSidecarFormat) {
      throw Error(ErrorCode::FormatError, "not a provenance sidecar: " + replay);
    }
    RunConfig cfg;
    ConfigMap values;
    for (const auto& [k, v] : j.at("config").items()) values[k] = v.get<std::string>();
    apply_config(cfg, values);
    cfg.validate();
    const SubjectFiles files{j.at("subject").get<std::string>(),
                             j.at("inputs").at("image").get<std::string>(),
                             j.at("inputs").at("labels").get<std::string>()};
    const Subject s = load_subject(files, cfg.input);
    const auto index = j.at("sample_index").get<std::uint64_t>();
    ensure_dir(out);
    const SamplePair pair = generate_sample(s.labels, s.intensity, cfg.generation, index, s.id);
    write_sample(pair, &files, cfg, out);
    os << sample_stem(s.id, index, cfg.generation.master_seed) << '\n';
    return;
  }

  RunConfig cfg = resolve(common);
  if (continue_on_error) cfg.continue_on_error = true;
  if (input.empty()) throw Error(ErrorCode::InvalidArgument, "generate needs --input or --replay");
  const std::vector<SubjectFiles> found = discover_subjects(input, cfg.input);
  std::vector<Subject> subjects;
  std::vector<SubjectFiles> kept;
  for (const SubjectFiles& f : found) {
    try {
      subjects.push_back(load_subject(f, cfg.input));
      kept.push_back(f);
    } catch (const Error& e) {
      if (!cfg.continue_on_error) throw;
      std::cerr << "warning: skipping subject " << f.id << ": " << e.what() << '\n';
    }
  }
  if (subjects.empty()) {
    throw Error(ErrorCode::EmptySample, "no usable (image, label) pairs in " + input);
  }
  for (const std::string& stem : run_generation(subjects, kept, cfg, out)) os << stem << '\n';
}

void cmd_bench(const CommonOpts& common, const std::string& input, int size, bool compare_epg,
               const std::string& out, std::ostream& os) {
  RunConfig cfg = resolve(common);
  const int samples = common.count ? *common.count : cfg.bench_samples;
  Subject subject;
  if (!input.empty()) {
    const auto found = discover_subjects(input, cfg.input);
    if (found.empty()) throw Error(ErrorCode::EmptySample, "no subjects in " + input);
    subject = load_subject(found.front(), cfg.input);
  } else {
    subject = make_phantom(Eigen::Vector3i::Constant(size),
                           Eigen::Vector3d::Constant(128.0 / size), 0, "phantom");
  }
  std::vector<BenchResult> results{run_bench(subject, cfg.generation, samples)};
  if (compare_epg && !cfg.generation.uses_epg()) {
    GenerationConfig epg = cfg.generation;
    epg.mode = GeneratorMode::RandFaBiAN;
    results.push_back(run_bench(subject, epg, samples));
  }
  std::ostringstream r;
  r << std::setprecision(6);
  r << "mode\tsamples\tmedian_s\tp95_s\tvolumes_per_s\tcluster_med_s\trender_med_s"
       "\taugment_med_s\tresample_med_s\tstage_sum_over_total\n";
  for (const BenchResult& b : results) {
    std::vector<double> c, re, a, rs;
    double stage = 0.0, total = 0.0;
    for (const StageTimings& t : b.runs) {
      c.push_back(t.cluster);
      re.push_back(t.render);
      a.push_back(t.augment);
      rs.push_back(t.resample);
      stage += t.stage_sum();
      total += t.total;
    }
    r << to_string(b.mode) << '\t' << b.runs.size() << '\t' << b.median_total() << '\t'
      << b.p95_total() << '\t' << 1.0 / b.median_total() << '\t' << percentile_of(c, 50) << '\t'
      << percentile_of(re, 50) << '\t' << percentile_of(a, 50) << '\t' << percentile_of(rs, 50)
      << '\t' << (total > 0 ? stage / total : 1.0) << '\n';
  }
  if (results.size() == 2) {
    r << "# epg_over_gmm_median_ratio\t"
      << results[1].median_total() / results[0].median_total() << '\n';
  }
  os << r.str();
  if (!out.empty()) write_text_atomic(out, r.str());
}

std::string alpha_file_name(double alpha) { return "soup_alpha" + format_double(alpha) + ".wsoup"; }

void cmd_interpolate(const std::string& a_path, const std::string& b_path,
                     std::optional<double> alpha, const std::string& alphas,
                     const std::string& out, std::ostream& os) {
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "interpolate needs --out");
  const Checkpoint a = read_checkpoint(a_path);
  const Checkpoint b = read_checkpoint(b_path);
  if (alpha) {
    write_checkpoint(interpolate(a, b, *alpha), out);
    os << out << '\n';
    return;
  }
  const std::vector<double> sweep =
      alphas.empty() ? RunConfig{}.alphas : parse_double_list(alphas);
  std::vector<Checkpoint> soups;
  for (double x : sweep) soups.push_back(interpolate(a, b, x));
  ensure_dir(out);
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const fs::path p = fs::path(out) / alpha_file_name(sweep[i]);
    write_checkpoint(soups[i], p.string());
    os << p.string() << '\n';
  }
}

void cmd_evaluate(const std::string& manifest, const std::string& out, std::ostream& os) {
  const std::vector<unsigned char> bytes = read_file_bytes(manifest);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  const fs::path base = fs::path(manifest).parent_path();
  auto resolve_path = [&](const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  std::vector<EvalCase> cases;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string subject, pred, gt;
    if (!std::getline(ls, subject, '\t') || !std::getline(ls, pred, '\t') ||
        !std::getline(ls, gt, '\t')) {
      throw Error(ErrorCode::FormatError, "manifest line needs subject<TAB>pred<TAB>gt: " + line);
    }
    if (subject == "subject" && pred == "prediction") continue;  // header
    cases.push_back({subject, read_labels(resolve_path(pred), LabelScheme::Feta7),
                     read_labels(resolve_path(gt), LabelScheme::Feta7)});
  }
  if (cases.empty()) throw Error(ErrorCode::EmptySample, "manifest lists no cases");
  const std::string report = format_report(batch_evaluate(cases));
  if (!out.empty()) write_text_atomic(out, report);
  os << report;
}

void cmd_epg(const CommonOpts& common, const std::string& labels_path, const std::string& out,
             bool echoes, std::ostream& os) {
  RunConfig cfg = resolve(common);
  if (!cfg.generation.uses_epg()) {
    if (!common.mode.empty()) {
      throw Error(ErrorCode::InvalidArgument, "epg needs --mode fabian or randfabian");
    }
    cfg.generation.mode = GeneratorMode::FaBiAN;
  }
  const AnyVolume any = read_nifti(labels_path);
  const LabelMap labels = std::holds_alternative<LabelMap>(any)
                              ? std::get<LabelMap>(any)
                              : read_labels(labels_path, LabelScheme::Feta7);
  const SampleRng rng(cfg.generation.master_seed, 0);
  RngStream ss = rng.stream(Stage::EpgSequence);
  const EpgSequenceParams seq = draw_sequence(cfg.generation.sequence, ss);
  RelaxometryConfig rc = cfg.generation.relaxometry;
  rc.mode = cfg.generation.mode == GeneratorMode::FaBiAN ? RelaxometryMode::Reference
                                                         : RelaxometryMode::Randomized;
  std::map<std::int32_t, std::int32_t> keys;
  for (std::int32_t v : labels.values()) {
    if (v != 0) keys[v] = v;
  }
  RngStream rs = rng.stream(Stage::Relaxometry);
  std::vector<std::string> warnings;
  const RelaxometryTable table = sample_relaxometry(rc, keys, rs, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
  const Volume3D img = render_epg_volume(labels, table, seq);
  if (!out.empty()) write_nifti(img, out, is_gzip_path(out));
  os << std::setprecision(10) << "refocusing_deg\t" << seq.refocusing_deg[0] << "\nte_eff_ms\t"
     << seq.te_eff << "\necho_number\t" << seq.echo_number() << '\n';
  os << "class\tt1_ms\tt2_ms\tpd\tsignal\n";
  for (const auto& [id, t] : table) {
    const std::vector<double> train = epg_fse_echoes(t, seq);
    os << id << '\t' << t.t1 << '\t' << t.t2 << '\t' << t.pd << '\t'
       << t.pd * train[std::size_t(seq.echo_number() - 1)] << '\n';
    if (echoes) {
      os << "echoes\t" << id;
      for (double e : train) os << '\t' << e;
      os << '\n';
    }
  }
}

void cmd_cluster_inspect(const CommonOpts& common, const std::string& image_path,
                         const std::string& labels_path, const std::string& out,
                         std::ostream& os) {
  RunConfig cfg = resolve(common);
  const SubjectFiles files{"inspect", image_path, labels_path};
  const Subject s = load_subject(files, cfg.input);
  const LabelMap classes = build_meta_classes(s.labels, s.intensity, cfg.generation.class_table());
  SplitOptions split;
  split.k_range = cfg.generation.k_range;
  split.non_brain_k_range = cfg.generation.non_brain_k_range;
  split.em = cfg.generation.em;
  RngStream ps = SampleRng(cfg.generation.master_seed, 0).stream(Stage::Partition);
  const SubclassPartition part = split_meta_classes(classes, s.intensity, split, ps);
  if (!out.empty()) write_nifti(part.subclass_map, out, is_gzip_path(out));
  os << std::setprecision(10) << "subclass\tclass\tcomponent\tmean\tvariance\tweight\tvoxels\n";
  for (std::int32_t id = 1; id <= part.total(); ++id) {
    const SubclassInfo& i = part.info(id);
    os << id << '\t' << i.parent_class << '\t' << i.component << '\t' << i.mean << '\t'
       << i.variance << '\t' << i.weight << '\t' << i.voxels << '\n';
  }
}

}  // namespace

// --------------------------------------------------------- public API --

std::vector<SubjectFiles> discover_subjects(const fs::path& dir, const InputConfig& input) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::IoError, "input directory not found: " + dir.string());
  }
  std::map<std::string, fs::path> images, labels;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string stem = nifti_stem(entry.path().filename().string());
    if (stem.empty()) continue;
    if (ends_with(stem, input.image_suffix)) {
      images[stem.substr(0, stem.size() - input.image_suffix.size())] = entry.path();
    } else if (ends_with(stem, input.label_suffix)) {
      labels[stem.substr(0, stem.size() - input.label_suffix.size())] = entry.path();
    }
  }
  std::vector<SubjectFiles> out;
  for (const auto& [id, image] : images) {
    const auto it = labels.find(id);
    if (it != labels.end()) out.push_back({id, image, it->second});
  }
  return out;
}

Subject load_subject(const SubjectFiles& files, const InputConfig& input) {
  Subject s;
  s.id = files.id;
  s.intensity = read_image(files.image);
  s.labels = read_labels(files.labels, input.label_scheme);
  if (s.labels.scheme() == LabelScheme::DrawEm9) s.labels = remap_drawem_to_feta(s.labels);
  s.labels.validate_codes();
  require_same_grid(s.labels.geometry(), s.intensity.geometry(), files.id.c_str());
  if (input.preprocess) {
    const Eigen::Vector3d spacing = Eigen::Vector3d::Constant(input.target_spacing);
    const Eigen::Vector3i dims = Eigen::Vector3i::Constant(input.target_size);
    s.intensity = crop_or_pad(resample(s.intensity, spacing, InterpKind::Trilinear), dims);
    s.labels = crop_or_pad(resample(s.labels, spacing, InterpKind::NearestNeighbor), dims);
  }
  return s;
}

std::string sample_stem(const std::string& subject, std::uint64_t index, std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06llu", static_cast<unsigned long long>(index));
  return subject + "_s" + buf + "_seed" + std::to_string(seed);
}

std::vector<std::string> run_generation(const std::vector<Subject>& subjects,
                                        const std::vector<SubjectFiles>& files,
                                        const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  if (subjects.empty()) throw Error(ErrorCode::EmptySample, "no subjects to generate from");
  ensure_dir(out_dir);
  const std::uint64_t count = std::uint64_t(cfg.count);
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!failed.load()) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        const std::size_t k = std::size_t(i % subjects.size());
        const Subject& s = subjects[k];
        const SamplePair pair = generate_sample(s.labels, s.intensity, cfg.generation, i, s.id);
        write_sample(pair, k < files.size() ? &files[k] : nullptr, cfg, out_dir);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  const int workers = int(std::min<std::uint64_t>(std::uint64_t(cfg.workers), count));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::vector<std::string> stems;
  for (std::uint64_t i = 0; i < count; ++i) {
    stems.push_back(sample_stem(subjects[std::size_t(i % subjects.size())].id, i,
                                cfg.generation.master_seed));
  }
  return stems;
}

double BenchResult::median_total() const {
  std::vector<double> t;
  for (const StageTimings& r : runs) t.push_back(r.total);
  return percentile_of(t, 50);
}

double BenchResult::p95_total() const {
  std::vector<double> t;
  for (const StageTimings& r : runs) t.push_back(r.total);
  return percentile_of(t, 95);
}

BenchResult run_bench(const Subject& subject, const GenerationConfig& cfg, int samples) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "bench needs >= 1 sample");
  BenchResult b;
  b.mode = cfg.mode;
  for (int i = 0; i < samples; ++i) {
    b.runs.push_back(
        generate_sample(subject.labels, subject.intensity, cfg, std::uint64_t(i), subject.id)
            .timings);
  }
  return b;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain-randomized fetal brain MRI synthesis toolkit", "drifts"};
  app.require_subcommand(1);

  CommonOpts gen_common, bench_common, epg_common, inspect_common;
  std::string gen_input, gen_out, gen_replay;
  bool gen_continue = false;
  auto* gen = app.add_subcommand("generate", "generate synthetic (image, label) pairs");
  add_common(gen, gen_common);
  gen->add_option("--input", gen_input, "directory of (image, label) NIfTI pairs");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--replay", gen_replay, "re-render one sample from its sidecar");
  gen->add_flag("--continue-on-error", gen_continue, "skip unreadable subjects");

  std::string bench_input, bench_out;
  int bench_size = 128;
  bool bench_compare = false;
  auto* bench = app.add_subcommand("bench", "generation throughput benchmark");
  add_common(bench, bench_common);
  bench->add_option("--input", bench_input, "subject directory (first subject is used)");
  bench->add_option("--size", bench_size, "phantom edge length when no input is given");
  bench->add_flag("--compare-epg", bench_compare, "also time the EPG pipeline");
  bench->add_option("--out", bench_out, "report file");

  std::string a_path, b_path, alphas, interp_out;
  std::optional<double> alpha;
  auto* interp = app.add_subcommand("interpolate", "weight-space interpolation of two checkpoints");
  interp->add_option("a", a_path, "first checkpoint (alpha = 0)")->required();
  interp->add_option("b", b_path, "second checkpoint (alpha = 1)")->required();
  auto* alpha_opt = interp->add_option("--alpha", alpha, "single interpolation weight");
  interp->add_option("--alphas", alphas, "comma-separated sweep")->excludes(alpha_opt);
  interp->add_option("--out", interp_out, "output file (--alpha) or directory (sweep)");

  std::string manifest, eval_out;
  auto* eval = app.add_subcommand("evaluate", "Dice / HD95 report from a manifest");
  eval->add_option("--manifest", manifest, "TSV: subject, prediction, ground truth")->required();
  eval->add_option("--out", eval_out, "report file");

  std::string epg_labels, epg_out;
  bool epg_echoes = false;
  auto* epg = app.add_subcommand("epg", "render a label map with the EPG signal model");
  add_common(epg, epg_common);
  epg->add_option("--labels", epg_labels, "label map")->required();
  epg->add_option("--out", epg_out, "output NIfTI");
  epg->add_flag("--echoes", epg_echoes, "print the full echo train per class");

  std::string inspect_image, inspect_labels, inspect_out;
  auto* inspect = app.add_subcommand("cluster-inspect", "show the EM subclass split of a subject");
  add_common(inspect, inspect_common);
  inspect->add_option("--image", inspect_image, "intensity image")->required();
  inspect->add_option("--labels", inspect_labels, "FeTA label map")->required();
  inspect->add_option("--out", inspect_out, "subclass map output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: code=InvalidArgument message=\"" << quote_message(e.what()) << "\"\n";
    return 2;
  }

  try {
    if (*gen) cmd_generate(gen_common, gen_input, gen_out, gen_replay, gen_continue, out);
    if (*bench) cmd_bench(bench_common, bench_input, bench_size, bench_compare, bench_out, out);
    if (*interp) cmd_interpolate(a_path, b_path, alpha, alphas, interp_out, out);
    if (*eval) cmd_evaluate(manifest, eval_out, out);
    if (*epg) cmd_epg(epg_common, epg_labels, epg_out, epg_echoes, out);
    if (*inspect) cmd_cluster_inspect(inspect_common, inspect_image, inspect_labels, inspect_out, out);
  } catch (const Error& e) {
    err << "error: code=" << to_string(e.code()) << " message=\"" << quote_message(e.what())
        << "\"\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: code=Internal message=\"" << quote_message(e.what()) << "\"\n";
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace drifts::cli
