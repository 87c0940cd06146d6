#include "ppgsleep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ppgsleep/error.hpp"
#include "ppgsleep/ingest.hpp"
#include "ppgsleep/parallel.hpp"
#include "ppgsleep/random.hpp"
#include "ppgsleep/text_format.hpp"

namespace fs = std::filesystem;

namespace ppgsleep {
namespace {

// Independent streams per subject, so e.g. the noise level never changes
// the beat sequence.
enum Stream : std::uint64_t { kStages = 0, kHeart = 1, kActivity = 2, kNoise = 3, kDemographics = 4 };

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

StageLabel sleep_stage(const SynthParams& p, Rng& rng) {
    const double total = p.n1_weight + p.n2_weight + p.n3_weight + p.rem_weight;
    double u = rng.uniform() * total;
    if ((u -= p.n1_weight) < 0.0) return StageLabel::N1;
    if ((u -= p.n2_weight) < 0.0) return StageLabel::N2;
    if ((u -= p.n3_weight) < 0.0) return StageLabel::N3;
    return StageLabel::REM;
}

double activity_count(bool sleep, const SynthParams& p, Rng& rng) {
    const double zero = sleep ? p.act_sleep_zero_prob : p.act_wake_zero_prob;
    const double median = sleep ? p.act_sleep_log_median : p.act_wake_log_median;
    const double sd = sleep ? p.act_sleep_log_sd : p.act_wake_log_sd;
    if (rng.bernoulli(zero)) return 0.0;
    return std::round(std::exp(rng.normal(std::log(median), sd)));
}

void add_gaussian(std::vector<double>& x, double fs, double center, double amplitude, double width) {
    if (amplitude == 0.0 || width <= 0.0) return;
    const double reach = 6.0 * width;
    const auto lo = static_cast<std::ptrdiff_t>(std::max(0.0, std::ceil((center - reach) * fs)));
    const auto hi = static_cast<std::ptrdiff_t>(std::min<double>(static_cast<double>(x.size()) - 1.0, std::floor((center + reach) * fs)));
    const double inv = 1.0 / (2.0 * width * width);
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
        const double d = static_cast<double>(i) / fs - center;
        x[static_cast<std::size_t>(i)] += amplitude * std::exp(-d * d * inv);
    }
}

// Location of the systolic maximum of the clean waveform near `center`: the
// neighbouring pulses tilt the sum, so the peak is not exactly the centre.
double systolic_peak(const std::vector<double>& centers, std::size_t j, const SynthParams& p) {
    const double ws = p.systolic_width_s, wd = p.dicrotic_width_s;
    const double reach = std::max(6.0 * ws, p.dicrotic_delay_s + 6.0 * wd);
    const auto lo = std::lower_bound(centers.begin(), centers.end(), centers[j] - reach);
    const auto hi = std::upper_bound(centers.begin(), centers.end(), centers[j] + reach);
    // d/dt and d2/dt2 of a * exp(-(t - c)^2 / 2w^2).
    const auto add = [](double t, double c, double a, double w, double& d1, double& d2) {
        if (a == 0.0 || w <= 0.0) return;
        const double u = (t - c) / w;
        const double g = a * std::exp(-0.5 * u * u);
        d1 += -g * u / w;
        d2 += g * (u * u - 1.0) / (w * w);
    };
    double t = centers[j];
    for (int it = 0; it < 50; ++it) {
        double d1 = 0.0, d2 = 0.0;
        for (auto c = lo; c != hi; ++c) {
            add(t, *c, 1.0, ws, d1, d2);
            add(t, *c + p.dicrotic_delay_s, p.dicrotic_amplitude, wd, d1, d2);
        }
        if (!(d2 < 0.0)) break;
        const double step = std::clamp(-d1 / d2, -0.25 * ws, 0.25 * ws);
        t += step;
        if (std::abs(step) < 1e-13) break;
    }
    return t;
}

std::string format_truth(const SynthGroundTruth& t, std::span<const StageLabel> stages) {
    std::string out = "# subject_id=" + t.subject_id + "\nepoch,state,stage,hr_bpm\n";
    for (std::size_t e = 0; e < t.state.size(); ++e) {
        out += std::to_string(e) + "," + to_char(t.state[e]) + "," + std::string(to_string(stages[e])) + ",";
        text::append_double(out, t.epoch_hr_bpm[e]);
        out += '\n';
    }
    return out;
}

std::string format_beats(const SynthGroundTruth& t) {
    std::string out = "# subject_id=" + t.subject_id + "\nbeat_s\n";
    for (double b : t.beat_times_s) {
        text::append_double(out, b);
        out += '\n';
    }
    return out;
}

}  // namespace

void SynthParams::validate() const {
    const auto fail = [](const std::string& what) { throw ValidationError("synth: " + what); };
    if (epochs == 0) fail("epochs must be >= 1");
    if (!(fs_hz > 0.0)) fail("fs_hz must be positive");
    for (double p : {p_sleep_to_wake, p_wake_to_sleep, p_unscored, act_wake_zero_prob, act_sleep_zero_prob})
        if (!is_probability(p)) fail("probabilities must lie in [0, 1]");
    for (double w : {n1_weight, n2_weight, n3_weight, rem_weight})
        if (!(w >= 0.0)) fail("stage weights must be >= 0");
    if (!(n1_weight + n2_weight + n3_weight + rem_weight > 0.0)) fail("stage weights must not all be zero");
    for (double s : {hr_wake_std, hr_sleep_std, ibi_jitter_wake_s, ibi_jitter_sleep_s, act_wake_log_sd, act_sleep_log_sd,
                     quantum})
        if (!(s >= 0.0)) fail("standard deviations must be >= 0");
    for (double m : {hr_wake_mean, hr_sleep_mean})
        if (!(m > 30.0 && m < 180.0)) fail("heart-rate means must lie in (30, 180) bpm");
    if (!(min_ibi_s > 0.0)) fail("min_ibi_s must be positive");
    if (!(act_wake_log_median > 0.0) || !(act_sleep_log_median > 0.0)) fail("activity medians must be positive");
    if (!(systolic_width_s > 0.0) || !(dicrotic_width_s > 0.0)) fail("pulse widths must be positive");
    if (snr_db && !std::isfinite(*snr_db)) fail("snr_db must be finite");
    if (age_min < 0 || age_max < age_min) fail("age range is empty");
}

std::string synth_subject_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "S%04zu", index + 1);
    return buf;
}

std::uint64_t synth_subject_seed(const SynthParams& params, std::size_t index) {
    return derive_seed(params.seed, index);
}

double expected_sleep_fraction(const SynthParams& p) {
    double sleep = p.initial_state == SleepWake::Sleep ? 1.0 : 0.0;
    double sum = 0.0;
    for (std::size_t e = 0; e < p.epochs; ++e) {
        sum += sleep;
        sleep = sleep * (1.0 - p.p_sleep_to_wake) + (1.0 - sleep) * p.p_wake_to_sleep;
    }
    return sum / static_cast<double>(p.epochs);
}

SynthSubject generate_subject(const SynthParams& p, std::uint64_t subject_seed, const std::string& subject_id) {
    p.validate();
    Rng stage_rng(derive_seed(subject_seed, kStages));
    Rng heart_rng(derive_seed(subject_seed, kHeart));
    Rng act_rng(derive_seed(subject_seed, kActivity));
    Rng noise_rng(derive_seed(subject_seed, kNoise));
    Rng demo_rng(derive_seed(subject_seed, kDemographics));

    SynthGroundTruth truth;
    truth.subject_id = subject_id;
    truth.params = p;

    std::vector<StageLabel> stages(p.epochs);
    std::vector<double> activity(p.epochs);
    SleepWake s = p.initial_state;
    for (std::size_t e = 0; e < p.epochs; ++e) {
        if (e > 0) {
            const double flip = s == SleepWake::Sleep ? p.p_sleep_to_wake : p.p_wake_to_sleep;
            if (stage_rng.bernoulli(flip)) s = s == SleepWake::Sleep ? SleepWake::Wake : SleepWake::Sleep;
        }
        truth.state.push_back(s);
        const StageLabel stage = s == SleepWake::Sleep ? sleep_stage(p, stage_rng) : StageLabel::W;
        stages[e] = stage_rng.bernoulli(p.p_unscored) ? StageLabel::Unscored : stage;

        const bool sleep = s == SleepWake::Sleep;
        const double hr = sleep ? heart_rng.normal(p.hr_sleep_mean, p.hr_sleep_std)
                                : heart_rng.normal(p.hr_wake_mean, p.hr_wake_std);
        truth.epoch_hr_bpm.push_back(std::clamp(hr, 35.0, 175.0));
        activity[e] = activity_count(sleep, p, act_rng);
    }

    const double duration = static_cast<double>(p.epochs) * kEpochSeconds;
    double t = heart_rng.uniform() * 60.0 / truth.epoch_hr_bpm[0];
    std::vector<double> centers;
    while (t < duration) {
        centers.push_back(t);
        const auto e = std::min(static_cast<std::size_t>(t / kEpochSeconds), p.epochs - 1);
        const double jitter = truth.state[e] == SleepWake::Sleep ? p.ibi_jitter_sleep_s : p.ibi_jitter_wake_s;
        const double ibi = 60.0 / truth.epoch_hr_bpm[e] + jitter * heart_rng.normal();
        t += std::max(ibi, p.min_ibi_s);
    }

    const auto n = static_cast<std::size_t>(std::llround(duration * p.fs_hz));
    std::vector<double> clean(n, p.baseline);
    for (double b : centers) {
        add_gaussian(clean, p.fs_hz, b, 1.0, p.systolic_width_s);
        add_gaussian(clean, p.fs_hz, b + p.dicrotic_delay_s, p.dicrotic_amplitude, p.dicrotic_width_s);
    }
    truth.beat_times_s.reserve(centers.size());
    for (std::size_t j = 0; j < centers.size(); ++j) truth.beat_times_s.push_back(systolic_peak(centers, j, p));

    std::vector<double> samples = clean;
    if (p.snr_db) {
        double mean = 0.0;
        for (double v : clean) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : clean) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var / std::pow(10.0, *p.snr_db / 10.0));
        for (double& v : samples) v += sd * noise_rng.normal();
    }
    if (p.quantum > 0.0)
        for (double& v : samples) v = std::round(v / p.quantum) * p.quantum;
    truth.clean = std::move(clean);

    const int span = p.age_max - p.age_min + 1;
    const int age = p.age_min + static_cast<int>(demo_rng.below(static_cast<std::uint64_t>(span)));
    const Gender gender = demo_rng.bernoulli(0.5) ? Gender::Female : Gender::Male;

    SubjectRecord record(PpgRecord(subject_id, p.fs_hz, std::move(samples)), ActivitySeries(std::move(activity)),
                         std::move(stages), Demographics(age, gender));
    return {std::move(record), std::move(truth)};
}

std::string format_synth_params(const SynthParams& p) {
    std::string out;
    const auto kv = [&](const char* k, const std::string& v) { out += std::string("# ") + k + "=" + v + "\n"; };
    const auto num = [](double v) { return text::format_double(v); };
    kv("seed", std::to_string(p.seed));
    kv("subjects", std::to_string(p.subjects));
    kv("epochs", std::to_string(p.epochs));
    kv("fs_hz", num(p.fs_hz));
    kv("p_sleep_to_wake", num(p.p_sleep_to_wake));
    kv("p_wake_to_sleep", num(p.p_wake_to_sleep));
    kv("initial_state", std::string(1, to_char(p.initial_state)));
    kv("stage_weights_n1_n2_n3_rem",
       num(p.n1_weight) + ";" + num(p.n2_weight) + ";" + num(p.n3_weight) + ";" + num(p.rem_weight));
    kv("p_unscored", num(p.p_unscored));
    kv("hr_wake_bpm", num(p.hr_wake_mean) + ";" + num(p.hr_wake_std));
    kv("hr_sleep_bpm", num(p.hr_sleep_mean) + ";" + num(p.hr_sleep_std));
    kv("ibi_jitter_wake_s", num(p.ibi_jitter_wake_s));
    kv("ibi_jitter_sleep_s", num(p.ibi_jitter_sleep_s));
    kv("min_ibi_s", num(p.min_ibi_s));
    kv("act_wake", num(p.act_wake_zero_prob) + ";" + num(p.act_wake_log_median) + ";" + num(p.act_wake_log_sd));
    kv("act_sleep", num(p.act_sleep_zero_prob) + ";" + num(p.act_sleep_log_median) + ";" + num(p.act_sleep_log_sd));
    kv("systolic_width_s", num(p.systolic_width_s));
    kv("dicrotic", num(p.dicrotic_delay_s) + ";" + num(p.dicrotic_amplitude) + ";" + num(p.dicrotic_width_s));
    kv("baseline", num(p.baseline));
    kv("snr_db", p.snr_db ? num(*p.snr_db) : "clean");
    kv("quantum", num(p.quantum));
    kv("age_range", std::to_string(p.age_min) + ";" + std::to_string(p.age_max));
    kv("seed_rule", "subject i (0-based) uses derive_seed(seed, i)");
    return out;
}

CohortSummary generate_cohort(const SynthParams& params, const fs::path& dir, unsigned jobs) {
    params.validate();
    std::error_code ec;
    fs::create_directories(dir / "truth", ec);
    if (ec) throw IoError("cannot create " + (dir / "truth").string() + ": " + ec.message());

    CohortSummary summary;
    summary.subjects = params.subjects;
    std::vector<ManifestEntry> entries(params.subjects);
    std::vector<std::size_t> sleep_epochs(params.subjects, 0);
    parallel_for(params.subjects, jobs, [&](std::size_t i) {
        const std::string id = synth_subject_id(i);
        const SynthSubject s = generate_subject(params, synth_subject_seed(params, i), id);
        ManifestEntry& e = entries[i];
        e.subject_id = id;
        e.ppg = dir / (id + ".ppg.csv");
        e.activity = dir / (id + ".activity.csv");
        e.stages = dir / (id + ".stages.csv");
        e.demographics = s.record.demographics();
        write_ppg_file(e.ppg, id, params.fs_hz, s.record.ppg().samples());
        write_activity_file(e.activity, id, s.record.activity().counts());
        write_stages_file(e.stages, id, s.record.stages());
        text::write_file(dir / "truth" / (id + ".beats.csv"), format_beats(s.truth));
        text::write_file(dir / "truth" / (id + ".truth.csv"), format_truth(s.truth, s.record.stages()));
        sleep_epochs[i] = static_cast<std::size_t>(std::count(s.truth.state.begin(), s.truth.state.end(), SleepWake::Sleep));
    });
    write_manifest(dir / "manifest.csv", entries);
    text::write_file(dir / "truth" / "params.txt", format_synth_params(params));

    summary.epochs = params.subjects * params.epochs;
    std::size_t sleep = 0;
    for (std::size_t v : sleep_epochs) sleep += v;
    summary.sleep_fraction = summary.epochs ? static_cast<double>(sleep) / static_cast<double>(summary.epochs) : 0.0;
    if (params.subjects == 0) summary.warnings.push_back("zero subjects requested; wrote an empty manifest");
    return summary;
}

}  // namespace ppgsleep
