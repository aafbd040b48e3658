#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cogeffort/rng.hpp"
#include "cogeffort/tensor.hpp"

namespace cogeffort {

// Double-gamma hemodynamic response. Each lobe is a gamma-shaped kernel
// normalised to 1 at its own delay: (t/d)^(d/s) * exp(-(t-d)/s).
struct HrfParams {
  double peak_delay = 6.0;             // s
  double undershoot_delay = 16.0;      // s
  double peak_dispersion = 1.0;
  double undershoot_dispersion = 1.0;
  double undershoot_ratio = 1.0 / 6.0;

  void validate() const;
};

double canonical_hrf(double t, const HrfParams& params);

struct CohortSpec {
  int n_participants = 16;
  int n_questions = 16;
  int sessions = 2;
  int segments_per_session = 2;
  int questions_per_segment = 4;
  double sample_rate = 10.0;  // Hz
  int samples_per_trial = 200;
  int n_optodes = 16;

  double effect_size = 0.6;      // extra response amplitude on wrong answers
  double noise_sd = 0.5;         // umol/L, white noise per sample
  double drift_slope_sd = 0.001; // umol/L per sample, zero-centred ramp
  double baseline_sd = 0.2;      // per-participant, per-optode offset
  double effort_mean = 1.0;      // participant response amplitude
  double effort_sd = 0.1;
  double stimulus_duration = 20.0;  // s, boxcar length from trial onset
  double missing_fraction = 0.0;    // fraction of cells set to NaN
  double target_correct_rate = 168.0 / 256.0;
  HrfParams hrf;
  std::uint64_t seed = 42;

  void validate() const;
  int segments_total() const { return sessions * segments_per_session; }
  /// Global segment index (1-based) of a 1-based question id.
  int segment_of(int question_id) const;
  /// 1-based session holding a global 1-based segment.
  int session_of_segment(int segment) const;
};

struct Trial {
  std::string participant_id;
  int question_id = 0;
  int session = 0;
  int segment = 0;
  Tensor hbo;  // (samples_per_trial, n_optodes); NaN marks a missing cell
  int label = 0;
  double score = 0.0;
};

struct ParticipantProfile {
  double effort = 1.0;
  std::vector<double> baseline;  // per optode
};

std::string participant_name(int index);  // 0 -> "P1"

/// Relative response gain per optode: lateral channels respond more strongly
/// than ventromedial ones.
double optode_gain(int optode);

ParticipantProfile draw_participant(const CohortSpec& spec, Rng& rng);

/// Identity fields are left at defaults; generate_cohort fills them.
Trial generate_trial(const CohortSpec& spec, const ParticipantProfile& profile,
                     bool correct, Rng& rng);

/// n_participants x n_questions trials, participant-major. Each trial uses a
/// substream derived from (seed, participant, question).
std::vector<Trial> generate_cohort(const CohortSpec& spec);

}  // namespace cogeffort
