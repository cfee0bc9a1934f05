#include "drifts/epg.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <utility>

namespace drifts {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
using cplx = std::complex<double>;
}  // namespace

void TissueRelaxometry::validate() const {
  if (!(t1 > 0.0) || !(t2 > 0.0)) {
    throw Error(ErrorCode::InvalidRelaxometry, "T1 and T2 must be > 0");
  }
  if (!(pd > 0.0) || !std::isfinite(pd)) {
    throw Error(ErrorCode::InvalidRelaxometry, "proton density must be finite and > 0");
  }
}

void EpgSequenceParams::validate() const {
  if (!(esp > 0.0) || !std::isfinite(esp)) {
    throw Error(ErrorCode::InvalidArgument, "echo spacing must be > 0");
  }
  if (etl < 1) throw Error(ErrorCode::InvalidArgument, "echo train length must be >= 1");
  if (refocusing_deg.size() != std::size_t(etl)) {
    throw Error(ErrorCode::InvalidArgument, "refocusing schedule length must equal ETL");
  }
  if (!(te_eff >= esp && te_eff <= etl * esp)) {
    throw Error(ErrorCode::InvalidArgument, "effective echo time must lie in [ESP, ETL*ESP]");
  }
}

int EpgSequenceParams::echo_number() const {
  return std::clamp(int(std::lround(te_eff / esp)), 1, etl);
}

EpgSequenceParams EpgSequenceParams::constant(double esp, int etl, double refocusing,
                                              double te_eff, double excitation) {
  EpgSequenceParams s;
  s.esp = esp;
  s.etl = etl;
  s.excitation_deg = excitation;
  s.refocusing_deg.assign(std::size_t(std::max(etl, 0)), refocusing);
  s.te_eff = te_eff;
  return s;
}

EpgSequenceParams draw_sequence(const EpgSequenceRanges& r, RngStream& rng) {
  r.refocusing_deg.validate("refocusing angle");
  r.te_eff.validate("effective echo time");
  const double angle = rng.uniform(r.refocusing_deg.lo, r.refocusing_deg.hi);
  const double te = rng.uniform(r.te_eff.lo, r.te_eff.hi);
  EpgSequenceParams s = EpgSequenceParams::constant(r.esp, r.etl, angle, te, r.excitation_deg);
  s.validate();
  return s;
}

EpgState::EpgState(int max_order)
    : fp_(std::size_t(max_order + 1)), fm_(std::size_t(max_order + 1)), z_(std::size_t(max_order + 1)) {
  if (max_order < 0) throw Error(ErrorCode::InvalidArgument, "EPG order must be >= 0");
  z_[0] = 1.0;
}

namespace {

// sin and cos of an angle in degrees, exact at multiples of 90.
std::pair<double, double> sincos_deg(double deg) {
  const double r = std::remainder(deg, 360.0);
  if (r == 0.0) return {0.0, 1.0};
  if (r == 90.0) return {1.0, 0.0};
  if (r == -90.0) return {-1.0, 0.0};
  if (r == 180.0 || r == -180.0) return {0.0, -1.0};
  return {std::sin(r * kDeg), std::cos(r * kDeg)};
}

cplx unit_deg(double deg) {
  const auto [s, c] = sincos_deg(deg);
  return {c, s};
}

}  // namespace

void EpgState::rf(double flip_deg, double phase_deg) {
  const auto [sh, ch] = sincos_deg(flip_deg / 2);
  const auto [s, c] = sincos_deg(flip_deg);
  const double c2 = ch * ch, s2 = sh * sh;
  const cplx e1 = unit_deg(phase_deg), e2 = unit_deg(2 * phase_deg);
  const cplx i(0.0, 1.0);
  for (std::size_t k = 0; k < z_.size(); ++k) {
    const cplx p = fp_[k], m = fm_[k], z = z_[k];
    fp_[k] = c2 * p + e2 * s2 * m - i * e1 * s * z;
    fm_[k] = std::conj(e2) * s2 * p + c2 * m + i * std::conj(e1) * s * z;
    z_[k] = -0.5 * i * std::conj(e1) * s * p + 0.5 * i * e1 * s * m + c * z;
  }
}

void EpgState::relax(double e1, double e2) {
  for (std::size_t k = 0; k < z_.size(); ++k) {
    fp_[k] *= e2;
    fm_[k] *= e2;
    z_[k] *= e1;
  }
  z_[0] += 1.0 - e1;
}

void EpgState::shift() {
  const std::size_t n = z_.size();
  for (std::size_t k = n - 1; k > 0; --k) fp_[k] = fp_[k - 1];
  for (std::size_t k = 0; k + 1 < n; ++k) fm_[k] = fm_[k + 1];
  fm_[n - 1] = 0.0;
  fp_[0] = std::conj(fm_[0]);
}

std::vector<double> epg_fse_echoes(double t1, double t2, const EpgSequenceParams& seq) {
  if (!(t1 > 0.0) || !(t2 > 0.0)) {
    throw Error(ErrorCode::InvalidRelaxometry, "T1 and T2 must be > 0");
  }
  if (!(seq.esp > 0.0) || seq.etl < 1 || seq.refocusing_deg.size() != std::size_t(seq.etl)) {
    throw Error(ErrorCode::InvalidArgument, "invalid echo train parameters");
  }
  const double half = seq.esp / 2.0;
  const double e1 = std::exp(-half / t1);
  const double e2 = std::exp(-half / t2);
  EpgState state(2 * seq.etl + 1);
  state.rf(seq.excitation_deg, 90.0);
  std::vector<double> echoes(std::size_t(seq.etl));
  for (int k = 0; k < seq.etl; ++k) {
    state.relax(e1, e2);
    state.shift();
    state.rf(seq.refocusing_deg[std::size_t(k)], 0.0);
    state.shift();
    state.relax(e1, e2);
    echoes[std::size_t(k)] = std::abs(state.f0());
  }
  return echoes;
}

std::vector<double> epg_fse_echoes(const TissueRelaxometry& tissue, const EpgSequenceParams& seq) {
  return epg_fse_echoes(tissue.t1, tissue.t2, seq);
}

void RelaxometryRanges::validate(const std::string& what) const {
  t1.validate((what + " T1").c_str());
  t2.validate((what + " T2").c_str());
  pd.validate((what + " PD").c_str());
  if (!(t1.lo > 0.0) || !(t2.lo > 0.0) || !(pd.lo > 0.0)) {
    throw Error(ErrorCode::InvalidRange, what + ": relaxometry ranges must be positive");
  }
}

RelaxometryTable sample_relaxometry(const RelaxometryConfig& cfg,
                                    const std::map<std::int32_t, std::int32_t>& range_key_of,
                                    RngStream& rng, std::vector<std::string>* warnings) {
  RelaxometryTable table;
  for (const auto& [id, key] : range_key_of) {
    const RelaxometryRanges* r = &cfg.randomized;
    if (cfg.mode == RelaxometryMode::Reference) {
      const auto it = cfg.reference.find(key);
      if (it == cfg.reference.end()) {
        throw Error(ErrorCode::MissingParams,
                    "no reference relaxometry interval for class " + std::to_string(key));
      }
      r = &it->second;
    }
    r->validate("class " + std::to_string(key));
    TissueRelaxometry t;
    t.t1 = rng.uniform(r->t1.lo, r->t1.hi);
    t.t2 = rng.uniform(r->t2.lo, r->t2.hi);
    t.pd = rng.uniform(r->pd.lo, r->pd.hi);
    t.validate();
    if (t.t2 > t.t1 && warnings != nullptr) {
      warnings->push_back("id " + std::to_string(id) + ": T2 exceeds T1");
    }
    table[id] = t;
  }
  return table;
}

Volume3D render_epg_volume(const LabelMap& ids, const RelaxometryTable& table,
                           const EpgSequenceParams& seq) {
  seq.validate();
  const std::size_t echo = std::size_t(seq.echo_number() - 1);
  const std::set<std::int32_t> present = ids.values();
  if (!present.empty() && *present.begin() < 0) {
    throw Error(ErrorCode::UnknownLabel, "negative render id");
  }
  std::vector<float> value(present.empty() ? 1 : std::size_t(*present.rbegin()) + 1, 0.0f);
  for (std::int32_t id : present) {
    if (id == 0) continue;
    const auto it = table.find(id);
    if (it == table.end()) {
      throw Error(ErrorCode::MissingParams, "no relaxometry for id " + std::to_string(id));
    }
    it->second.validate();
    value[std::size_t(id)] = float(it->second.pd * epg_fse_echoes(it->second, seq)[echo]);
  }
  Volume3D out(ids.geometry());
  for (Index i = 0; i < ids.size(); ++i) {
    out[i] = value[std::size_t(ids[i])];
  }
  return out;
}

std::string_view to_string(RelaxometryMode mode) {
  return mode == RelaxometryMode::Reference ? "reference" : "randomized";
}

RelaxometryMode relaxometry_mode_from_string(std::string_view name) {
  if (name == "reference") return RelaxometryMode::Reference;
  if (name == "randomized") return RelaxometryMode::Randomized;
  throw Error(ErrorCode::ConfigError, "unknown relaxometry mode '" + std::string(name) + "'");
}

}  // namespace drifts
