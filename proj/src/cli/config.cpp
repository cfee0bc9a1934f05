#include "drifts/cli/config.hpp"

#include <charconv>
#include <functional>
#include <regex>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "drifts/io.hpp"

namespace drifts::cli {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::ConfigError, "invalid value '" + value + "' for " + key);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, raw);
  return out;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, raw);
}

void read_into(double& dst, const std::string& k, const std::string& v) { dst = parse_number<double>(k, v); }
void read_into(int& dst, const std::string& k, const std::string& v) { dst = parse_number<int>(k, v); }
void read_into(std::uint64_t& dst, const std::string& k, const std::string& v) {
  dst = parse_number<std::uint64_t>(k, v);
}
void read_into(bool& dst, const std::string& k, const std::string& v) { dst = parse_bool(k, v); }
void read_into(std::string& dst, const std::string&, const std::string& v) { dst = trim(v); }

std::string show(double v) { return format_double(v); }
std::string show(int v) { return std::to_string(v); }
std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::string& v) { return v; }

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename Access>
Field plain(std::string key, Access access) {
  return {key,
          [access](const RunConfig& c) { return show(access(const_cast<RunConfig&>(c))); },
          [access, key](RunConfig& c, const std::string& v) { read_into(access(c), key, v); }};
}

#define DRIFTS_FIELD(key, expr) plain(key, [](RunConfig& c) -> auto& { return c.expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f = {
        {"generation.mode",
         [](const RunConfig& c) { return std::string(to_string(c.generation.mode)); },
         [](RunConfig& c, const std::string& v) { c.generation.mode = generator_mode_from_string(trim(v)); }},
        DRIFTS_FIELD("generation.seed", generation.master_seed),
        DRIFTS_FIELD("generation.mu_min", generation.mu_range.lo),
        DRIFTS_FIELD("generation.mu_max", generation.mu_range.hi),
        DRIFTS_FIELD("generation.sigma_min", generation.sigma_range.lo),
        DRIFTS_FIELD("generation.sigma_max", generation.sigma_range.hi),
        DRIFTS_FIELD("generation.subclass_min", generation.k_range.lo),
        DRIFTS_FIELD("generation.subclass_max", generation.k_range.hi),
        {"generation.non_brain_subclass_range",
         [](const RunConfig& c) {
           const auto& r = c.generation.non_brain_k_range;
           return r ? std::to_string(r->lo) + "," + std::to_string(r->hi) : std::string();
         },
         [](RunConfig& c, const std::string& v) {
           const std::string t = trim(v);
           if (t.empty()) {
             c.generation.non_brain_k_range.reset();
             return;
           }
           const auto comma = t.find(',');
           if (comma == std::string::npos) bad_value("generation.non_brain_subclass_range", v);
           c.generation.non_brain_k_range =
               CountRange{parse_number<int>("generation.non_brain_subclass_range", t.substr(0, comma)),
                          parse_number<int>("generation.non_brain_subclass_range", t.substr(comma + 1))};
         }},
        {"generation.cluster_order",
         [](const RunConfig& c) { return std::string(to_string(c.generation.cluster_order)); },
         [](RunConfig& c, const std::string& v) {
           c.generation.cluster_order = cluster_order_from_string(trim(v));
         }},
        {"generation.profile",
         [](const RunConfig& c) { return std::string(to_string(c.generation.profile)); },
         [](RunConfig& c, const std::string& v) {
           c.generation.profile = augment_profile_from_string(trim(v));
         }},
        DRIFTS_FIELD("em.max_iterations", generation.em.max_iterations),
        DRIFTS_FIELD("em.tolerance", generation.em.tolerance),
        DRIFTS_FIELD("em.variance_floor_ratio", generation.em.variance_floor_ratio),
        DRIFTS_FIELD("em.histogram_bins", generation.em.histogram_bins),

        DRIFTS_FIELD("augment.rotation", generation.augment.affine.rotation),
        DRIFTS_FIELD("augment.scale", generation.augment.affine.scale),
        DRIFTS_FIELD("augment.translation", generation.augment.affine.translation),
        DRIFTS_FIELD("augment.shear", generation.augment.affine.shear),
        DRIFTS_FIELD("augment.svf_control_points", generation.augment.svf.control_points),
        DRIFTS_FIELD("augment.svf_velocity_std", generation.augment.svf.velocity_std),
        DRIFTS_FIELD("augment.svf_squaring_steps", generation.augment.svf.squaring_steps),
        DRIFTS_FIELD("augment.svf_field_downsample", generation.augment.svf.field_downsample),
        DRIFTS_FIELD("augment.bias_control_points", generation.augment.bias.control_points),
        DRIFTS_FIELD("augment.bias_std", generation.augment.bias.std),
        DRIFTS_FIELD("augment.gamma_min", generation.augment.gamma.lo),
        DRIFTS_FIELD("augment.gamma_max", generation.augment.gamma.hi),
        DRIFTS_FIELD("augment.noise_sigma_min", generation.augment.noise_sigma.lo),
        DRIFTS_FIELD("augment.noise_sigma_max", generation.augment.noise_sigma.hi),
        DRIFTS_FIELD("augment.simple_rotation", generation.augment.simple_affine.rotation),
        DRIFTS_FIELD("augment.simple_scale", generation.augment.simple_affine.scale),
        DRIFTS_FIELD("augment.simple_translation", generation.augment.simple_affine.translation),
        DRIFTS_FIELD("augment.simple_shear", generation.augment.simple_affine.shear),
        DRIFTS_FIELD("augment.simple_gamma_min", generation.augment.simple_gamma.lo),
        DRIFTS_FIELD("augment.simple_gamma_max", generation.augment.simple_gamma.hi),
        DRIFTS_FIELD("augment.simple_noise_sigma", generation.augment.simple_noise_sigma),
        DRIFTS_FIELD("augment.simple_blur_sigma_min", generation.augment.simple_blur_sigma.lo),
        DRIFTS_FIELD("augment.simple_blur_sigma_max", generation.augment.simple_blur_sigma.hi),
        DRIFTS_FIELD("augment.simple_probability", generation.augment.simple_probability),

        DRIFTS_FIELD("resolution.in_plane_min", generation.augment.resolution.in_plane.lo),
        DRIFTS_FIELD("resolution.in_plane_max", generation.augment.resolution.in_plane.hi),
        DRIFTS_FIELD("resolution.thickness_min", generation.augment.resolution.thickness.lo),
        DRIFTS_FIELD("resolution.thickness_max", generation.augment.resolution.thickness.hi),
        DRIFTS_FIELD("resolution.slice_axis", generation.augment.resolution.slice_axis),

        DRIFTS_FIELD("epg.echo_spacing", generation.sequence.esp),
        DRIFTS_FIELD("epg.echo_train_length", generation.sequence.etl),
        DRIFTS_FIELD("epg.excitation_flip", generation.sequence.excitation_deg),
        DRIFTS_FIELD("epg.refocusing_flip_min", generation.sequence.refocusing_deg.lo),
        DRIFTS_FIELD("epg.refocusing_flip_max", generation.sequence.refocusing_deg.hi),
        DRIFTS_FIELD("epg.effective_echo_time_min", generation.sequence.te_eff.lo),
        DRIFTS_FIELD("epg.effective_echo_time_max", generation.sequence.te_eff.hi),

        DRIFTS_FIELD("relaxometry.randomized_t1_min", generation.relaxometry.randomized.t1.lo),
        DRIFTS_FIELD("relaxometry.randomized_t1_max", generation.relaxometry.randomized.t1.hi),
        DRIFTS_FIELD("relaxometry.randomized_t2_min", generation.relaxometry.randomized.t2.lo),
        DRIFTS_FIELD("relaxometry.randomized_t2_max", generation.relaxometry.randomized.t2.hi),
        DRIFTS_FIELD("relaxometry.randomized_pd_min", generation.relaxometry.randomized.pd.lo),
        DRIFTS_FIELD("relaxometry.randomized_pd_max", generation.relaxometry.randomized.pd.hi),

        DRIFTS_FIELD("input.image_suffix", input.image_suffix),
        DRIFTS_FIELD("input.label_suffix", input.label_suffix),
        {"input.label_scheme",
         [](const RunConfig& c) {
           return std::string(c.input.label_scheme == LabelScheme::DrawEm9 ? "drawem9" : "feta7");
         },
         [](RunConfig& c, const std::string& v) {
           const std::string t = trim(v);
           if (t == "feta7") {
             c.input.label_scheme = LabelScheme::Feta7;
           } else if (t == "drawem9") {
             c.input.label_scheme = LabelScheme::DrawEm9;
           } else {
             bad_value("input.label_scheme", v);
           }
         }},
        DRIFTS_FIELD("input.preprocess", input.preprocess),
        DRIFTS_FIELD("input.target_spacing", input.target_spacing),
        DRIFTS_FIELD("input.target_size", input.target_size),

        DRIFTS_FIELD("run.count", count),
        DRIFTS_FIELD("run.workers", workers),
        DRIFTS_FIELD("run.continue_on_error", continue_on_error),
        DRIFTS_FIELD("run.bench_samples", bench_samples),
        {"run.alphas",
         [](const RunConfig& c) {
           std::string s;
           for (double a : c.alphas) s += (s.empty() ? "" : ",") + format_double(a);
           return s;
         },
         [](RunConfig& c, const std::string& v) { c.alphas = parse_double_list(v); }},
    };
    return f;
  }();
  return table;
}

#undef DRIFTS_FIELD

const std::regex& reference_key() {
  static const std::regex re(R"(relaxometry\.class(\d+)_(t1|t2|pd)_(min|max))");
  return re;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format number");
  return std::string(buf, ptr);
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<double>("list", item));
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "empty number list '" + text + "'");
  return out;
}

void RunConfig::validate() const {
  generation.validate();
  if (count < 1) throw Error(ErrorCode::ConfigError, "run.count must be >= 1");
  if (workers < 1) throw Error(ErrorCode::ConfigError, "run.workers must be >= 1");
  if (bench_samples < 1) throw Error(ErrorCode::ConfigError, "run.bench_samples must be >= 1");
  if (!(input.target_spacing > 0.0) || input.target_size < 1) {
    throw Error(ErrorCode::ConfigError, "input target grid must be positive");
  }
  if (input.image_suffix.empty() || input.label_suffix.empty() ||
      input.image_suffix == input.label_suffix) {
    throw Error(ErrorCode::ConfigError, "input suffixes must be distinct and non-empty");
  }
}

ConfigMap parse_ini(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config parse error: ") + e.what());
  }
  ConfigMap out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      out[section] = body.data();
      continue;
    }
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

ConfigMap parse_ini_file(const std::string& path) {
  const std::vector<unsigned char> bytes = read_file_bytes(path);
  return parse_ini(std::string(bytes.begin(), bytes.end()));
}

void apply_config(RunConfig& cfg, const ConfigMap& values) {
  for (const auto& [key, value] : values) {
    std::smatch m;
    if (std::regex_match(key, m, reference_key())) {
      const std::int32_t cls = parse_number<std::int32_t>(key, m[1].str());
      RelaxometryRanges& r = cfg.generation.relaxometry.reference[cls];
      Range& range = m[2] == "t1" ? r.t1 : m[2] == "t2" ? r.t2 : r.pd;
      (m[3] == "min" ? range.lo : range.hi) = parse_number<double>(key, value);
      continue;
    }
    bool found = false;
    for (const Field& f : fields()) {
      if (f.key == key) {
        f.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  }
}

ConfigMap dump_config(const RunConfig& cfg) {
  ConfigMap out;
  for (const Field& f : fields()) out[f.key] = f.get(cfg);
  for (const auto& [cls, r] : cfg.generation.relaxometry.reference) {
    const std::string p = "relaxometry.class" + std::to_string(cls) + "_";
    out[p + "t1_min"] = format_double(r.t1.lo);
    out[p + "t1_max"] = format_double(r.t1.hi);
    out[p + "t2_min"] = format_double(r.t2.lo);
    out[p + "t2_max"] = format_double(r.t2.hi);
    out[p + "pd_min"] = format_double(r.pd.lo);
    out[p + "pd_max"] = format_double(r.pd.hi);
  }
  return out;
}

std::string to_ini(const ConfigMap& values) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [key, value] : values) {
    const auto dot = key.find('.');
    sections[key.substr(0, dot)].emplace_back(dot == std::string::npos ? "" : key.substr(dot + 1),
                                              value);
  }
  std::ostringstream os;
  for (const auto& [section, entries] : sections) {
    os << '[' << section << "]\n";
    for (const auto& [k, v] : entries) os << k << " = " << v << '\n';
    os << '\n';
  }
  return os.str();
}

}  // namespace drifts::cli
