#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ppgsleep/types.hpp"

namespace ppgsleep {

struct SynthParams {
    std::uint64_t seed = 0;
    std::size_t subjects = 50;
    std::size_t epochs = 480;
    double fs_hz = 256.0;

    // Epoch-level two-state chain.
    double p_sleep_to_wake = 0.05;
    double p_wake_to_sleep = 0.10;
    SleepWake initial_state = SleepWake::Wake;
    // Sleep epochs are split into N1/N2/N3/REM with these weights.
    double n1_weight = 0.10, n2_weight = 0.50, n3_weight = 0.20, rem_weight = 0.20;
    double p_unscored = 0.005;

    // Per-epoch heart rate (bpm) and per-beat interval jitter (s).
    double hr_wake_mean = 75.0, hr_wake_std = 8.0;
    double hr_sleep_mean = 58.0, hr_sleep_std = 5.0;
    double ibi_jitter_wake_s = 0.08, ibi_jitter_sleep_s = 0.04;
    double min_ibi_s = 0.33;

    // Activity: zero with the given probability, otherwise a rounded
    // log-normal count exp(N(log_median, log_sd)).
    double act_wake_zero_prob = 0.25, act_wake_log_median = 40.0, act_wake_log_sd = 1.0;
    double act_sleep_zero_prob = 0.80, act_sleep_log_median = 5.0, act_sleep_log_sd = 0.8;

    // Pulse: systolic Gaussian at the beat plus a delayed dicrotic Gaussian.
    double systolic_width_s = 0.08;
    double dicrotic_delay_s = 0.30, dicrotic_amplitude = 0.35, dicrotic_width_s = 0.10;
    double baseline = 0.0;

    // White noise relative to the clean signal's variance; nullopt = clean.
    std::optional<double> snr_db = 20.0;
    // Samples are rounded to this step (keeps files compact); 0 disables.
    double quantum = 1e-4;

    int age_min = 54, age_max = 90;

    // Throws ValidationError on probabilities outside [0,1], negative spreads,
    // HR means outside (30, 180) or zero epochs.
    void validate() const;
};

struct SynthGroundTruth {
    std::string subject_id;
    // Systolic maxima of the clean waveform; strictly increasing.
    std::vector<double> beat_times_s;
    std::vector<SleepWake> state;      // per epoch, including unscored epochs
    std::vector<double> epoch_hr_bpm;  // target HR per epoch
    std::vector<double> clean;         // noise-free PPG at fs_hz (before rounding)
    SynthParams params;
};

struct SynthSubject {
    SubjectRecord record;
    SynthGroundTruth truth;
};

/// One subject from its own seed. Demographics: integer age uniform in
/// [age_min, age_max], gender by a fair coin.
SynthSubject generate_subject(const SynthParams& params, std::uint64_t subject_seed, const std::string& subject_id);

// "S0001", "S0002", ...
std::string synth_subject_id(std::size_t index);
// derive_seed(params.seed, index)
std::uint64_t synth_subject_seed(const SynthParams& params, std::size_t index);

// Expected fraction of Sleep epochs of the chain, from the exact state
// distribution at every epoch.
double expected_sleep_fraction(const SynthParams& params);

struct CohortSummary {
    std::size_t subjects = 0;
    std::size_t epochs = 0;
    double sleep_fraction = 0.0;  // over all epochs, unscored ones included
    std::vector<std::string> warnings;
};

/// Writes manifest.csv, <id>.ppg.csv / .activity.csv / .stages.csv per
/// subject and a truth/ sidecar (params.txt, <id>.beats.csv, <id>.truth.csv)
/// under `dir`. Byte-identical for a fixed seed. Throws IoError when the
/// directory cannot be created or written.
CohortSummary generate_cohort(const SynthParams& params, const std::filesystem::path& dir, unsigned jobs = 1);

// "# key=value" lines listing every parameter.
std::string format_synth_params(const SynthParams& params);

}  // namespace ppgsleep
