#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "drifts/rng.hpp"
#include "drifts/types.hpp"
#include "drifts/volume.hpp"

namespace drifts {

/// T1/T2 in ms (T1 may be +inf to disable regrowth), PD weight > 0.
struct TissueRelaxometry {
  double t1 = 0.0;
  double t2 = 0.0;
  double pd = 1.0;

  /// Throws InvalidRelaxometry on non-positive or NaN values.
  void validate() const;
};

using RelaxometryTable = std::map<std::int32_t, TissueRelaxometry>;

struct EpgSequenceParams {
  double esp = 6.12;                  // echo spacing, ms
  int etl = 150;                      // echo train length
  double excitation_deg = 90.0;
  std::vector<double> refocusing_deg;  // length etl
  double te_eff = 90.0;               // ms

  void validate() const;
  /// 1-based echo number round(te_eff / esp), kept inside 1..etl.
  int echo_number() const;

  static EpgSequenceParams constant(double esp, int etl, double refocusing_deg,
                                    double te_eff, double excitation_deg = 90.0);
};

/// Ranges for per-sample sequence draws. The refocusing angle is drawn once
/// and held along the train.
struct EpgSequenceRanges {
  double esp = 6.12;
  int etl = 150;
  double excitation_deg = 90.0;
  Range refocusing_deg{150.0, 180.0};
  Range te_eff{90.0, 300.0};
};

EpgSequenceParams draw_sequence(const EpgSequenceRanges& ranges, RngStream& rng);

/// Configuration states F+, F-, Z over orders 0..max_order.
class EpgState {
 public:
  explicit EpgState(int max_order);

  int max_order() const { return int(z_.size()) - 1; }
  const std::vector<std::complex<double>>& f_plus() const { return fp_; }
  const std::vector<std::complex<double>>& f_minus() const { return fm_; }
  const std::vector<std::complex<double>>& z() const { return z_; }

  /// Rotation by `flip` about the transverse axis at angle `phase` from x.
  void rf(double flip_deg, double phase_deg);
  /// Transverse decay by e2, longitudinal by e1 with regrowth of Z0.
  void relax(double e1, double e2);
  /// One unit of gradient dephasing.
  void shift();
  std::complex<double> f0() const { return fp_[0]; }

 private:
  std::vector<std::complex<double>> fp_, fm_, z_;
};

/// Echo amplitudes |F0| of a fast-spin-echo train, one per refocusing pulse.
std::vector<double> epg_fse_echoes(const TissueRelaxometry& tissue, const EpgSequenceParams& seq);
std::vector<double> epg_fse_echoes(double t1, double t2, const EpgSequenceParams& seq);

enum class RelaxometryMode { Reference, Randomized };

struct RelaxometryRanges {
  Range t1;
  Range t2;
  Range pd{1.0, 1.0};

  void validate(const std::string& what) const;
};

struct RelaxometryConfig {
  RelaxometryMode mode = RelaxometryMode::Randomized;
  /// Per-class intervals for REFERENCE mode; nothing is preset.
  std::map<std::int32_t, RelaxometryRanges> reference;
  RelaxometryRanges randomized{{200.0, 4000.0}, {20.0, 2500.0}, {0.2, 1.0}};
};

/// One draw per entry of `range_key_of` (render id -> class whose interval
/// applies), in ascending id order. T2 > T1 lands in `warnings`.
RelaxometryTable sample_relaxometry(const RelaxometryConfig& cfg,
                                    const std::map<std::int32_t, std::int32_t>& range_key_of,
                                    RngStream& rng, std::vector<std::string>* warnings = nullptr);

/// Every nonzero id gets PD x echo amplitude at echo_number(); 0 stays 0.
Volume3D render_epg_volume(const LabelMap& ids, const RelaxometryTable& table,
                           const EpgSequenceParams& seq);

std::string_view to_string(RelaxometryMode mode);
RelaxometryMode relaxometry_mode_from_string(std::string_view name);

}  // namespace drifts
