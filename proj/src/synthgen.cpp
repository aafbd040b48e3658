#include "cogeffort/synthgen.hpp"

#include <cmath>
#include <limits>

#include "cogeffort/error.hpp"

namespace cogeffort {

namespace {

double gamma_lobe(double t, double delay, double dispersion) {
  const double shape = delay / dispersion;
  return std::exp(shape * std::log(t / delay) - (t - delay) / dispersion);
}

// Causal convolution of the stimulus boxcar with the sampled HRF.
std::vector<double> boxcar_response(const CohortSpec& spec) {
  const int n = spec.samples_per_trial;
  const double dt = 1.0 / spec.sample_rate;
  const int stim = static_cast<int>(std::lround(spec.stimulus_duration * spec.sample_rate));
  std::vector<double> kernel(n);
  for (int k = 0; k < n; ++k) kernel[k] = canonical_hrf(k * dt, spec.hrf) * dt;
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k <= i; ++k) {
      if (i - k < stim) s += kernel[k];
    }
    out[i] = s;
  }
  return out;
}

}  // namespace

void HrfParams::validate() const {
  if (!(peak_delay > 0) || !(undershoot_delay > 0)) {
    throw ConfigError("hrf delays must be positive");
  }
  if (!(peak_dispersion > 0) || !(undershoot_dispersion > 0)) {
    throw ConfigError("hrf dispersions must be positive");
  }
  if (!(undershoot_ratio >= 0 && undershoot_ratio < 1)) {
    throw ConfigError("hrf undershoot_ratio must lie in [0, 1)");
  }
}

double canonical_hrf(double t, const HrfParams& params) {
  params.validate();
  if (t <= 0.0) return 0.0;
  return gamma_lobe(t, params.peak_delay, params.peak_dispersion) -
         params.undershoot_ratio *
             gamma_lobe(t, params.undershoot_delay, params.undershoot_dispersion);
}

void CohortSpec::validate() const {
  hrf.validate();
  if (n_participants < 1) throw ConfigError("n_participants must be >= 1");
  if (sessions < 1 || segments_per_session < 1 || questions_per_segment < 1) {
    throw ConfigError("session layout counts must be positive");
  }
  if (n_questions != sessions * segments_per_session * questions_per_segment) {
    throw ConfigError("n_questions must equal sessions x segments_per_session x "
                      "questions_per_segment");
  }
  if (samples_per_trial < 1 || samples_per_trial > 300) {
    throw ConfigError("samples_per_trial must lie in [1, 300]");
  }
  if (n_optodes < 1) throw ConfigError("n_optodes must be >= 1");
  if (!(sample_rate > 0)) throw ConfigError("sample_rate must be positive");
  if (!(target_correct_rate > 0 && target_correct_rate < 1)) {
    throw ConfigError("target_correct_rate must lie in (0, 1)");
  }
  if (noise_sd < 0 || drift_slope_sd < 0 || baseline_sd < 0 || effort_sd < 0) {
    throw ConfigError("standard deviations must be non-negative");
  }
  if (!(missing_fraction >= 0 && missing_fraction < 1)) {
    throw ConfigError("missing_fraction must lie in [0, 1)");
  }
  if (!(stimulus_duration > 0)) throw ConfigError("stimulus_duration must be positive");
}

int CohortSpec::segment_of(int question_id) const {
  return (question_id - 1) / questions_per_segment + 1;
}

int CohortSpec::session_of_segment(int segment) const {
  return (segment - 1) / segments_per_session + 1;
}

std::string participant_name(int index) { return "P" + std::to_string(index + 1); }

double optode_gain(int optode) {
  // Optodes 1-4 and 13-16 (1-based) sit over the lateral PFC.
  const bool lateral = optode < 4 || optode >= 12;
  return lateral ? 1.0 : 0.7;
}

ParticipantProfile draw_participant(const CohortSpec& spec, Rng& rng) {
  ParticipantProfile p;
  p.effort = rng.normal(spec.effort_mean, spec.effort_sd);
  p.baseline.resize(spec.n_optodes);
  for (auto& b : p.baseline) b = rng.normal(0.0, spec.baseline_sd);
  return p;
}

Trial generate_trial(const CohortSpec& spec, const ParticipantProfile& profile,
                     bool correct, Rng& rng) {
  spec.validate();
  if (static_cast<int>(profile.baseline.size()) != spec.n_optodes) {
    throw ShapeError("participant baseline length does not match n_optodes");
  }
  const auto n = static_cast<std::size_t>(spec.samples_per_trial);
  const auto m = static_cast<std::size_t>(spec.n_optodes);
  const std::vector<double> response = boxcar_response(spec);
  const double amplitude = profile.effort + (correct ? 0.0 : spec.effect_size);
  const double centre = 0.5 * static_cast<double>(n - 1);

  Trial trial;
  trial.hbo = Tensor({n, m});
  for (std::size_t o = 0; o < m; ++o) {
    const double slope = spec.drift_slope_sd > 0 ? rng.normal(0.0, spec.drift_slope_sd) : 0.0;
    const double gain = amplitude * optode_gain(static_cast<int>(o));
    for (std::size_t t = 0; t < n; ++t) {
      double v = profile.baseline[o] + gain * response[t] +
                 slope * (static_cast<double>(t) - centre);
      if (spec.noise_sd > 0) v += rng.normal(0.0, spec.noise_sd);
      trial.hbo(t, o) = v;
    }
  }
  if (spec.missing_fraction > 0) {
    for (auto& v : trial.hbo.values()) {
      if (rng.uniform() < spec.missing_fraction) {
        v = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  trial.score = correct ? 1.0 : 0.0;
  trial.label = correct ? 1 : 0;
  return trial;
}

std::vector<Trial> generate_cohort(const CohortSpec& spec) {
  spec.validate();
  std::vector<Trial> trials;
  trials.reserve(static_cast<std::size_t>(spec.n_participants) * spec.n_questions);
  for (int p = 0; p < spec.n_participants; ++p) {
    Rng profile_rng(derive_seed(spec.seed, {0, static_cast<std::uint64_t>(p)}));
    const ParticipantProfile profile = draw_participant(spec, profile_rng);
    for (int q = 1; q <= spec.n_questions; ++q) {
      Rng rng(derive_seed(spec.seed, {1, static_cast<std::uint64_t>(p),
                                      static_cast<std::uint64_t>(q)}));
      const bool correct = rng.uniform() < spec.target_correct_rate;
      Trial trial = generate_trial(spec, profile, correct, rng);
      trial.participant_id = participant_name(p);
      trial.question_id = q;
      trial.segment = spec.segment_of(q);
      trial.session = spec.session_of_segment(trial.segment);
      trials.push_back(std::move(trial));
    }
  }
  return trials;
}

}  // namespace cogeffort
