#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>

#include "ppgsleep/error.hpp"
#include "ppgsleep/evaluate.hpp"
#include "ppgsleep/features.hpp"
#include "ppgsleep/ingest.hpp"
#include "ppgsleep/kernels/kernels.hpp"
#include "ppgsleep/learn.hpp"
#include "ppgsleep/parallel.hpp"
#include "ppgsleep/synth.hpp"
#include "ppgsleep/text_format.hpp"

namespace fs = std::filesystem;

namespace ppgsleep::cli {
namespace {

constexpr const char* kDataRootEnv = "PPGSLEEP_DATA_ROOT";
constexpr const char* kToolName = "ppgsleep " PPGSLEEP_VERSION;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SynthOptions {
    std::string out;
    std::size_t subjects = 50;
    std::size_t epochs = 480;
    std::uint64_t seed = 0;
    std::string snr_db = "20";
};

struct FeaturesOptions {
    std::string data;
    std::string out;
    std::string fold_frozen = "true";
};

struct EvaluateOptions {
    std::string features;
    std::string model = "gbdt";
    int k = 10;
    std::uint64_t seed = 0;
    double threshold = 0.5;
    std::string report_dir;
    std::string columns = "hr,hrv,act";
    double positive_weight = 1.0;
    std::string aggregation = "pooled";
    TrainConfig hyper;  // only the kind-specific parameter blocks are used
};

// key = value lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    const std::string content = text::read_file(path);
    std::vector<std::pair<std::string, std::string>> kv;
    std::size_t line_no = 0;
    for (auto line : text::split(content, '\n')) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw UsageError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        kv.emplace_back(std::string(text::trim(line.substr(0, eq))), std::string(text::trim(line.substr(eq + 1))));
    }
    return kv;
}

std::set<std::string> long_names(const CLI::App& app) {
    std::set<std::string> names;
    for (const CLI::Option* o : app.get_options())
        for (const auto& n : o->get_lnames())
            if (n != "help") names.insert(n);
    return names;
}

// Flags given on the command line win; config entries only fill the rest.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    CLI::App* command = nullptr;
    std::size_t command_at = args.size();
    for (std::size_t i = 0; i < args.size() && !command; ++i) {
        for (CLI::App* sub : app.get_subcommands({})) {
            if (sub->get_name() == args[i]) {
                command = sub;
                command_at = i;
                break;
            }
        }
    }

    std::set<std::string> known = long_names(app);
    for (CLI::App* sub : app.get_subcommands({})) {
        const auto n = long_names(*sub);
        known.insert(n.begin(), n.end());
    }
    const auto given = [&](const std::string& key) {
        return std::any_of(args.begin(), args.end(),
                           [&](const std::string& a) { return a == "--" + key || a.rfind("--" + key + "=", 0) == 0; });
    };

    std::vector<std::string> global, local;
    for (const auto& [key, value] : read_config(config_path)) {
        if (!known.count(key) || key == "config") throw UsageError("unknown config key '" + key + "'");
        if (given(key)) continue;
        if (long_names(app).count(key)) {
            global.insert(global.end(), {"--" + key, value});
        } else if (command && long_names(*command).count(key)) {
            local.insert(local.end(), {"--" + key, value});
        }
        // keys of other commands are ignored so one file can serve all of them
    }
    std::vector<std::string> merged;
    merged.insert(merged.end(), global.begin(), global.end());
    for (std::size_t i = 0; i < args.size(); ++i) {
        merged.push_back(args[i]);
        if (i == command_at) merged.insert(merged.end(), local.begin(), local.end());
    }
    return merged;
}

// Effective value of every option of the command, sorted by name.
ReportHeader effective_config(const CLI::App& app, const CLI::App& command, const std::string& config_path) {
    std::map<std::string, std::string> values;
    for (const CLI::App* a : {&app, &command}) {
        for (const CLI::Option* o : a->get_options()) {
            const auto& names = o->get_lnames();
            if (names.empty() || names.front() == "help" || names.front() == "version" || names.front() == "config")
                continue;
            std::string v;
            if (o->count() > 0) {
                for (const auto& r : o->results()) v += (v.empty() ? "" : " ") + r;
            } else {
                v = o->get_default_str();
            }
            values["config." + names.front()] = v.empty() ? "none" : v;
        }
    }
    ReportHeader header{{"tool", kToolName}, {"config_file", config_path.empty() ? "none" : config_path}};
    for (const auto& kv : values) header.push_back(kv);
    return header;
}

std::string header_text(const ReportHeader& header) {
    std::string out;
    for (const auto& [k, v] : header) out += "# " + k + "=" + v + "\n";
    return out;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

// ---------------------------------------------------------------- synth

int run_synth(const SynthOptions& o, unsigned jobs, std::ostream& out, std::ostream& err) {
    SynthParams p;
    p.seed = o.seed;
    p.subjects = o.subjects;
    p.epochs = o.epochs;
    if (o.snr_db == "clean" || o.snr_db == "none") {
        p.snr_db.reset();
    } else {
        const auto v = text::parse_double(o.snr_db);
        if (!v) throw UsageError("--snr-db expects a number or 'clean'");
        p.snr_db = *v;
    }
    if (o.epochs == 0) throw UsageError("--epochs must be >= 1");
    make_dir(o.out);
    const CohortSummary s = generate_cohort(p, o.out, jobs);
    for (const auto& w : s.warnings) err << "warning: " << w << '\n';
    out << "synth: " << s.subjects << " subjects, " << s.epochs << " epochs, sleep fraction "
        << text::format_double(s.sleep_fraction) << ", written to " << o.out << '\n';
    return kOk;
}

// ------------------------------------------------------------- features

int run_features(const FeaturesOptions& o, const ReportHeader& base_header, unsigned jobs, std::ostream& out,
                 std::ostream& err) {
    std::string data = o.data;
    if (data.empty()) {
        if (const char* env = std::getenv(kDataRootEnv)) data = env;
    }
    if (data.empty()) throw UsageError(std::string("--data is required (or set ") + kDataRootEnv + ")");
    const fs::path manifest_path = fs::is_directory(data) ? fs::path(data) / "manifest.csv" : fs::path(data);
    if (!fs::exists(manifest_path)) throw IoError("manifest not found: " + manifest_path.string());
    const RejectionMode mode = o.fold_frozen == "true" ? RejectionMode::FoldFrozen : RejectionMode::Global;

    const DatasetManifest m = load_manifest(manifest_path);
    for (const auto& w : m.warnings) err << "warning: " << w << '\n';
    make_dir(o.out);

    const std::size_t n = m.entries.size();
    std::vector<SubjectWindows> cohort(n);
    std::vector<ExtractionStats> extraction(n);
    std::vector<std::uint64_t> digests(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        const ManifestEntry& e = m.entries[i];
        // Ingest messages usually name the subject already.
        const auto named = [&](const std::exception& ex) {
            const std::string msg = ex.what();
            return msg.find(e.subject_id) != std::string::npos ? msg : "subject " + e.subject_id + ": " + msg;
        };
        try {
            const SubjectRecord rec = load_subject(e);
            cohort[i] = extract_subject_windows(rec, &extraction[i]);
        } catch (const IoError& ex) {
            throw IoError(named(ex));
        } catch (const ValidationError& ex) {
            throw ValidationError(named(ex));
        }
        std::uint64_t h = text::fnv1a64(e.subject_id);
        for (const auto& path : {e.ppg, e.activity, e.stages}) h = text::fnv1a64(text::read_file(path), h);
        digests[i] = h;
    });
    std::uint64_t digest = text::fnv1a64(text::read_file(manifest_path));
    for (std::uint64_t d : digests) digest = text::fnv1a64(text::hex64(d), digest);

    std::size_t total_windows = 0;
    for (const auto& s : cohort) total_windows += s.windows.size();
    RejectionRule rule;
    const bool any_windows = total_windows > 0;
    if (any_windows) rule = fit_rejection(cohort);

    ReportHeader header = base_header;
    header.emplace_back("dataset_digest", text::hex64(digest));
    header.emplace_back("rejection", std::string(to_string(mode)));
    std::string report = "# format=ppgsleep-rejection/1\n" + header_text(header);
    report += "# hrv_mean_s=" + text::format_double(rule.hrv_mean) + "\n# hrv_std_s=" +
              text::format_double(rule.hrv_std) + "\n# max_hr_bpm=" + text::format_double(rule.max_hr_bpm) +
              "\n# hrv_band_sigma=" + text::format_double(rule.band_sigma) + "\n";
    if (mode == RejectionMode::FoldFrozen)
        report += "# note=cohort-wide fit shown for reference; evaluate refits the rule on each fold's training subjects\n";
    report += "subject_id,epochs,unscored,undefined,windows_in,dropped_hr,dropped_hrv,windows_kept\n";

    RejectionStats total;
    std::size_t written = 0, kept_rows = 0;
    ExtractionStats ext_total;
    for (std::size_t i = 0; i < n; ++i) {
        RejectionStats st;
        std::vector<SubjectWindows> kept;
        if (any_windows) kept = apply_rejection(std::span(&cohort[i], 1), rule, &st);
        total += st;
        const auto& ex = extraction[i];
        ext_total.epochs += ex.epochs;
        ext_total.unscored += ex.unscored;
        ext_total.undefined += ex.undefined;
        report += cohort[i].subject_id + "," + std::to_string(ex.epochs) + "," + std::to_string(ex.unscored) + "," +
                  std::to_string(ex.undefined) + "," + std::to_string(cohort[i].windows.size()) + "," +
                  std::to_string(st.dropped_hr) + "," + std::to_string(st.dropped_hrv) + "," +
                  std::to_string(st.windows_kept()) + "\n";

        const SubjectWindows& chosen =
            mode == RejectionMode::Global ? (kept.empty() ? SubjectWindows{cohort[i].subject_id, {}, {}} : kept.front())
                                          : cohort[i];
        auto matrix = assemble_matrix(chosen);
        if (!matrix) {
            err << "warning: subject " << cohort[i].subject_id << " has no usable windows and is dropped\n";
            continue;
        }
        matrix->set_demographics(m.entries[i].demographics);
        write_feature_table(*matrix, fs::path(o.out) / (cohort[i].subject_id + ".features.csv"), mode);
        ++written;
        kept_rows += matrix->rows();
    }
    const double drop_rate =
        total.windows_in ? static_cast<double>(total.dropped_hr + total.dropped_hrv) / static_cast<double>(total.windows_in)
                         : 0.0;
    report += "TOTAL," + std::to_string(ext_total.epochs) + "," + std::to_string(ext_total.unscored) + "," +
              std::to_string(ext_total.undefined) + "," + std::to_string(total.windows_in) + "," +
              std::to_string(total.dropped_hr) + "," + std::to_string(total.dropped_hrv) + "," +
              std::to_string(total.windows_kept()) + "\n";
    std::string dropped_ids;
    for (const auto& id : total.dropped_subject_ids) dropped_ids += (dropped_ids.empty() ? "" : ";") + id;
    report += "# subjects_in=" + std::to_string(n) + "\n# subjects_dropped=" + std::to_string(total.subjects_dropped) +
              "\n# dropped_subject_ids=" + (dropped_ids.empty() ? "none" : dropped_ids) + "\n# drop_rate=" +
              text::format_double(drop_rate) + "\n";
    text::write_file(fs::path(o.out) / "rejection.csv", report);

    out << "features: " << written << " subject tables, " << kept_rows << " windows written (" << to_string(mode)
        << " rejection); rejection pass drops " << (total.dropped_hr + total.dropped_hrv) << " of " << total.windows_in
        << " windows (hr " << total.dropped_hr << ", hrv " << total.dropped_hrv << ", "
        << text::format_double(std::round(drop_rate * 1e4) / 1e2) << "%), " << total.subjects_dropped
        << " subjects dropped\n";
    return kOk;
}

// ------------------------------------------------------------- evaluate

std::array<bool, kFeatureCount> parse_columns(const std::string& s) {
    std::array<bool, kFeatureCount> cols{false, false, false};
    for (auto name : text::split(s, ',')) {
        if (name == "hr") cols[0] = true;
        else if (name == "hrv") cols[1] = true;
        else if (name == "act") cols[2] = true;
        else throw UsageError("--columns: unknown column '" + std::string(name) + "' (use hr, hrv, act)");
    }
    return cols;
}

int run_evaluate(const EvaluateOptions& o, const ReportHeader& base_header, unsigned jobs, std::ostream& out) {
    if (!fs::is_directory(o.features)) throw IoError("feature directory not found: " + o.features);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(o.features)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 13 && name.ends_with(".features.csv")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<SubjectWindows> cohort;
    std::optional<RejectionMode> mode;
    std::uint64_t digest = text::fnv1a64("");
    for (const auto& f : files) {
        const std::string content = text::read_file(f);
        digest = text::fnv1a64(f.filename().string(), digest);
        digest = text::fnv1a64(content, digest);
        const FeatureTable t = parse_feature_table(content, f.string());
        if (mode && *mode != t.rejection) throw ValidationError(f.string() + ": feature tables mix rejection modes");
        mode = t.rejection;
        cohort.push_back(windows_from_matrix(t.matrix));
    }

    TrainConfig config = o.hyper;
    config.kind = *parse_model_kind(o.model);
    config.seed = o.seed;
    config.threshold = o.threshold;
    config.positive_weight = o.positive_weight;
    config.columns = parse_columns(o.columns);
    try {
        config.validate();
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }

    CvOptions cv_options;
    cv_options.k = o.k;
    cv_options.seed = o.seed;
    cv_options.fold_rejection = mode.value_or(RejectionMode::FoldFrozen) == RejectionMode::FoldFrozen;
    cv_options.aggregation = o.aggregation == "per-subject" ? FoldAggregation::PerSubject : FoldAggregation::Pooled;
    cv_options.jobs = jobs;

    const CvResult cv = cross_validate(cohort, config, cv_options);
    const auto strata = stratified_report(subject_scores(cv.subjects));

    ReportHeader header = base_header;
    header.emplace_back("dataset_digest", text::hex64(digest));
    header.emplace_back("subjects", std::to_string(cohort.size()));
    header.emplace_back("rejection", cv_options.fold_rejection ? "fold-frozen" : "global");

    const fs::path dir = o.report_dir;
    make_dir(dir);
    text::write_file(dir / "folds.csv", format_folds_table(cv, header));
    text::write_file(dir / "summary.csv", format_summary_table(cv, header));
    text::write_file(dir / "stratified.csv", format_stratified_table(strata, header));
    text::write_file(dir / "sleep_summary.csv", format_sleep_summary_table(cv.subjects, header));
    const std::string summary = format_summary_text(cv, strata, header);
    text::write_file(dir / "summary.txt", summary);
    out << summary;
    return kOk;
}

bool is_help_or_version(const CLI::ParseError& e) {
    return e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sleep/wake classification from wrist PPG and actigraphy", "ppgsleep"};
    app.set_version_flag("--version", std::string(kToolName));
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    unsigned jobs = 1;
    app.add_option("--config", config_path, "key = value file; command-line flags take precedence");
    app.add_option("--jobs", jobs, "Worker threads (0 = all cores)")->capture_default_str();

    SynthOptions so;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic cohort with ground truth");
    synth->add_option("--out", so.out, "Output directory")->required();
    synth->add_option("--subjects", so.subjects, "Number of subjects")->capture_default_str();
    synth->add_option("--epochs", so.epochs, "30 s epochs per subject")->capture_default_str();
    synth->add_option("--seed", so.seed, "Random seed")->capture_default_str();
    synth->add_option("--snr-db", so.snr_db, "Additive noise SNR in dB, or 'clean'")->capture_default_str();

    FeaturesOptions fo;
    CLI::App* features = app.add_subcommand("features", "Preprocess, detect beats and extract per-epoch features");
    features->add_option("--data", fo.data, std::string("Dataset directory or manifest (default $") + kDataRootEnv + ")");
    features->add_option("--out", fo.out, "Output directory for feature tables")->required();
    features->add_option("--fold-frozen-rejection", fo.fold_frozen,
                         "true: keep all windows and let evaluate fit rejection per fold; false: reject cohort-wide now")
        ->check(CLI::IsMember({"true", "false"}))
        ->capture_default_str();

    EvaluateOptions eo;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Subject-grouped k-fold cross-validation with reports");
    evaluate->add_option("--features", eo.features, "Directory of *.features.csv tables")->required();
    evaluate->add_option("--model", eo.model, "logistic | rf | gbdt")
        ->check(CLI::IsMember({"logistic", "rf", "gbdt"}))
        ->capture_default_str();
    evaluate->add_option("--k", eo.k, "Number of folds")->capture_default_str();
    evaluate->add_option("--seed", eo.seed, "Fold-shuffle and model seed")->capture_default_str();
    evaluate->add_option("--threshold", eo.threshold, "Sleep if P(sleep) >= threshold")->capture_default_str();
    evaluate->add_option("--report-dir", eo.report_dir, "Output directory for reports")->required();
    evaluate->add_option("--columns", eo.columns, "Feature columns the model may use")->capture_default_str();
    evaluate->add_option("--positive-weight", eo.positive_weight, "Loss weight of Sleep windows")->capture_default_str();
    evaluate->add_option("--aggregation", eo.aggregation, "Fold metrics: pooled windows or mean over subjects")
        ->check(CLI::IsMember({"pooled", "per-subject"}))
        ->capture_default_str();
    auto& h = eo.hyper;
    evaluate->add_option("--lr-lambda", h.logistic.lambda)->capture_default_str();
    evaluate->add_option("--lr-max-iter", h.logistic.max_iter)->capture_default_str();
    evaluate->add_option("--rf-trees", h.forest.n_trees)->capture_default_str();
    evaluate->add_option("--rf-mtry", h.forest.mtry)->capture_default_str();
    evaluate->add_option("--rf-min-leaf", h.forest.min_leaf)->capture_default_str();
    evaluate->add_option("--rf-max-depth", h.forest.max_depth, "0 = unbounded")->capture_default_str();
    evaluate->add_option("--rf-bootstrap", h.forest.bootstrap)->default_str("true");
    evaluate->add_option("--gbdt-rounds", h.gbdt.n_rounds)->capture_default_str();
    evaluate->add_option("--gbdt-max-depth", h.gbdt.max_depth)->capture_default_str();
    evaluate->add_option("--gbdt-learning-rate", h.gbdt.learning_rate)->capture_default_str();
    evaluate->add_option("--gbdt-lambda", h.gbdt.lambda)->capture_default_str();
    evaluate->add_option("--gbdt-gamma", h.gbdt.gamma)->capture_default_str();
    evaluate->add_option("--gbdt-min-child-weight", h.gbdt.min_child_weight)->capture_default_str();

    try {
        std::vector<std::string> merged = merge_config(args, app);
        std::reverse(merged.begin(), merged.end());
        app.parse(merged);
    } catch (const CLI::ParseError& e) {
        if (is_help_or_version(e)) {
            out << (e.get_name() == "CallForVersion" ? std::string(kToolName) + "\n" : app.help());
            return kOk;
        }
        err << "error: " << e.what() << "\n" << app.help();
        return kUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return dynamic_cast<const IoError*>(&e) ? kIo : kUsage;
    }

    try {
        if (synth->parsed()) return run_synth(so, jobs, out, err);
        if (features->parsed())
            return run_features(fo, effective_config(app, *features, config_path), jobs, out, err);
        if (evaluate->parsed()) return run_evaluate(eo, effective_config(app, *evaluate, config_path), jobs, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const ProtocolError& e) {
        err << "error: " << e.what() << '\n';
        return kProtocol;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const DesignError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

}  // namespace ppgsleep::cli
