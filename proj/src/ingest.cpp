#include "ppgsleep/ingest.hpp"

#include <cmath>
#include <set>
#include <utility>

#include "ppgsleep/error.hpp"
#include "ppgsleep/text_format.hpp"

namespace fs = std::filesystem;

namespace ppgsleep {
namespace {

using text::parse_double;
using text::parse_int;

const std::vector<std::string_view> kManifestColumns{"subject_id", "ppg", "activity", "stages", "age", "gender"};
const std::vector<std::string_view> kActivityColumns{"epoch", "activity"};
const std::vector<std::string_view> kStageColumns{"epoch", "stage"};
const std::vector<std::string_view> kFeatureColumns{"epoch", "hr_bpm", "hrv_s", "act", "label"};

std::string describe(const std::string& subject, const fs::path& path) {
    return "subject " + subject + " (" + path.string() + ")";
}

void check_subject_meta(const text::Table& t, const std::string& subject, const std::string& what) {
    if (const auto* id = t.find("subject_id"); id && *id != subject)
        throw ValidationError(what + ": header subject_id=" + *id + " does not match manifest id " + subject);
}

std::int64_t expect_epoch(std::string_view field, std::size_t line, std::int64_t want, const std::string& what) {
    const auto e = parse_int(field);
    if (!e) throw ParseError(what + ": epoch is not an integer", line);
    if (*e != want)
        throw ParseError(what + ": expected epoch " + std::to_string(want) + ", got " + std::to_string(*e), line);
    return *e;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
    const std::string content = text::read_file(path);
    const auto table = text::parse_table(content, path.string(), kManifestColumns);

    DatasetManifest m;
    m.root = path.parent_path();
    if (const auto* f = table.find("format")) m.format_version = *f;
    else m.format_version = kManifestFormat;
    if (m.format_version != kManifestFormat)
        throw ParseError(path.string() + ": unsupported manifest format '" + m.format_version + "'", 0);

    std::set<std::string, std::less<>> seen;
    for (const auto& row : table.rows) {
        ManifestEntry e;
        e.subject_id = std::string(row.fields[0]);
        if (e.subject_id.empty()) throw ParseError(path.string() + ": empty subject_id", row.line);
        if (!seen.insert(e.subject_id).second)
            throw ValidationError(path.string() + ": duplicate subject id " + e.subject_id);

        e.ppg = m.root / fs::path(std::string(row.fields[1]));
        e.activity = m.root / fs::path(std::string(row.fields[2]));
        e.stages = m.root / fs::path(std::string(row.fields[3]));

        const auto age = parse_int(row.fields[4]);
        const auto gender = parse_gender(row.fields[5]);
        if (!age) throw ParseError(path.string() + ": age is not an integer", row.line);
        if (!gender) throw ParseError(path.string() + ": unknown gender '" + std::string(row.fields[5]) + "'", row.line);
        e.demographics = Demographics(static_cast<int>(*age), *gender);

        for (const auto& [kind, file] : {std::pair{"PPG", &e.ppg}, std::pair{"activity", &e.activity},
                                         std::pair{"labels", &e.stages}}) {
            if (!fs::is_regular_file(*file))
                throw IoError("subject " + e.subject_id + ": missing " + kind + " file " + file->string());
        }
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty()) m.warnings.push_back(path.string() + ": manifest lists no subjects");
    return m;
}

SubjectRecord load_subject(const ManifestEntry& entry) {
    const std::string& id = entry.subject_id;

    // PPG
    const std::string ppg_what = describe(id, entry.ppg);
    const std::string ppg_content = text::read_file(entry.ppg);
    std::vector<double> samples;
    samples.reserve(ppg_content.size() / 7);
    // Rows are checked against the header arity; the value is always the last field.
    const auto ppg_table = text::scan_table(
        ppg_content, ppg_what, std::nullopt, [&](std::size_t line, const std::vector<std::string_view>& f) {
            const auto v = parse_double(f.back());
            if (!v) throw ParseError(ppg_what + ": value is not a number", line);
            samples.push_back(*v);
        });
    const auto& cols = ppg_table.columns;
    const bool plain = cols.size() == 1 && cols[0] == "value";
    const bool timed = cols.size() == 2 && cols[0] == "t" && cols[1] == "value";
    if (!plain && !timed)
        throw ParseError(ppg_what + ": column header must be 'value' or 't,value'", ppg_table.header_line);
    check_subject_meta(ppg_table, id, ppg_what);
    const auto fs_hz = parse_double(ppg_table.require("fs_hz", ppg_what));
    if (!fs_hz || !(*fs_hz > 0.0)) throw ValidationError(ppg_what + ": fs_hz must be a positive number");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i]))
            throw ValidationError(ppg_what + ": non-finite PPG sample at index " + std::to_string(i));
    }

    const double per_epoch = kEpochSeconds * *fs_hz;
    const auto epochs = static_cast<std::size_t>(std::floor(static_cast<double>(samples.size()) / per_epoch + 1e-9));
    const auto keep = static_cast<std::size_t>(std::llround(static_cast<double>(epochs) * per_epoch));
    if (keep < samples.size()) samples.resize(keep);

    // Activity
    const std::string act_what = describe(id, entry.activity);
    const std::string act_content = text::read_file(entry.activity);
    std::vector<double> counts;
    const auto act_table = text::scan_table(act_content, act_what, kActivityColumns,
                                            [&](std::size_t line, const std::vector<std::string_view>& f) {
                                                expect_epoch(f[0], line, static_cast<std::int64_t>(counts.size()), act_what);
                                                const auto v = parse_double(f[1]);
                                                if (!v) throw ParseError(act_what + ": activity is not a number", line);
                                                if (!std::isfinite(*v) || *v < 0.0)
                                                    throw ParseError(act_what + ": activity must be finite and >= 0", line);
                                                counts.push_back(*v);
                                            });
    check_subject_meta(act_table, id, act_what);

    // Stage labels
    const std::string st_what = describe(id, entry.stages);
    const std::string st_content = text::read_file(entry.stages);
    std::vector<StageLabel> stages;
    const auto st_table = text::scan_table(st_content, st_what, kStageColumns,
                                           [&](std::size_t line, const std::vector<std::string_view>& f) {
                                               expect_epoch(f[0], line, static_cast<std::int64_t>(stages.size()), st_what);
                                               const auto s = parse_stage(f[1]);
                                               if (!s) throw ParseError(st_what + ": unknown stage '" + std::string(f[1]) + "'", line);
                                               stages.push_back(*s);
                                           });
    check_subject_meta(st_table, id, st_what);

    if (stages.size() != epochs)
        throw ValidationError("subject " + id + ": epoch-count mismatch, PPG holds " + std::to_string(epochs) +
                              " whole epochs but labels file has " + std::to_string(stages.size()));
    if (counts.size() != epochs)
        throw ValidationError("subject " + id + ": epoch-count mismatch, PPG holds " + std::to_string(epochs) +
                              " whole epochs but activity file has " + std::to_string(counts.size()));

    return SubjectRecord(PpgRecord(id, *fs_hz, std::move(samples)), ActivitySeries(std::move(counts)),
                         std::move(stages), entry.demographics);
}

void write_ppg_file(const fs::path& path, const std::string& subject_id, double fs_hz, std::span<const double> samples) {
    std::string out;
    out.reserve(samples.size() * 8 + 64);
    out += "# subject_id=" + subject_id + "\n# fs_hz=";
    text::append_double(out, fs_hz);
    out += "\nvalue\n";
    for (double v : samples) {
        text::append_double(out, v);
        out += '\n';
    }
    text::write_file(path, out);
}

void write_activity_file(const fs::path& path, const std::string& subject_id, std::span<const double> counts) {
    std::string out = "# subject_id=" + subject_id + "\nepoch,activity\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        text::append_double(out, counts[i]);
        out += '\n';
    }
    text::write_file(path, out);
}

void write_stages_file(const fs::path& path, const std::string& subject_id, std::span<const StageLabel> stages) {
    std::string out = "# subject_id=" + subject_id + "\nepoch,stage\n";
    for (std::size_t i = 0; i < stages.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += to_string(stages[i]);
        out += '\n';
    }
    text::write_file(path, out);
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
    const fs::path root = path.parent_path();
    std::string out = std::string("# format=") + kManifestFormat + "\nsubject_id,ppg,activity,stages,age,gender\n";
    for (const auto& e : entries) {
        out += e.subject_id + ',' + e.ppg.lexically_relative(root).generic_string() + ',' +
               e.activity.lexically_relative(root).generic_string() + ',' +
               e.stages.lexically_relative(root).generic_string() + ',' + std::to_string(e.demographics.age) + ',' +
               std::string(to_string(e.demographics.gender)) + '\n';
    }
    text::write_file(path, out);
}

std::string_view to_string(RejectionMode mode) noexcept {
    return mode == RejectionMode::Global ? "global" : "fold-frozen";
}

std::optional<RejectionMode> parse_rejection_mode(std::string_view s) noexcept {
    if (s == "fold-frozen") return RejectionMode::FoldFrozen;
    if (s == "global") return RejectionMode::Global;
    return std::nullopt;
}

std::string format_feature_table(const FeatureMatrix& matrix, RejectionMode mode) {
    std::string out = std::string("# format=") + kFeatureTableFormat + "\n# subject_id=" + matrix.subject_id() + "\n";
    if (const auto& d = matrix.demographics()) {
        out += "# age=" + std::to_string(d->age) + "\n# gender=" + std::string(to_string(d->gender)) + "\n";
    }
    out += "# rejection=" + std::string(to_string(mode)) + "\n";
    out += "epoch,hr_bpm,hrv_s,act,label\n";
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        out += std::to_string(matrix.epoch_indices()[i]);
        for (double v : matrix.values()[i]) {
            out += ',';
            text::append_double(out, v);
        }
        out += ',';
        out += to_char(matrix.labels()[i]);
        out += '\n';
    }
    return out;
}

FeatureTable parse_feature_table(std::string_view content, std::string_view what_view) {
    const std::string what(what_view);
    std::vector<std::tuple<std::size_t, std::int64_t, FeatureRow, SleepWake>> rows;
    const auto t = text::scan_table(content, what, kFeatureColumns, [&](std::size_t line, const std::vector<std::string_view>& f) {
        const auto epoch = parse_int(f[0]);
        if (!epoch) throw ParseError(what + ": epoch is not an integer", line);
        FeatureRow r{};
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            const auto v = parse_double(f[c + 1]);
            if (!v) throw ParseError(what + ": field '" + std::string(f[c + 1]) + "' is not a number", line);
            r[c] = *v;
        }
        SleepWake label;
        if (f[4] == "S") label = SleepWake::Sleep;
        else if (f[4] == "W") label = SleepWake::Wake;
        else throw ParseError(what + ": label must be S or W", line);
        rows.emplace_back(line, *epoch, r, label);
    });

    if (const auto* fmt = t.find("format"); fmt && *fmt != kFeatureTableFormat)
        throw ParseError(what + ": unsupported feature table format '" + *fmt + "'", 0);

    std::optional<Demographics> demo;
    const auto* age = t.find("age");
    const auto* gender = t.find("gender");
    if (age || gender) {
        const auto a = age ? parse_int(*age) : std::optional<std::int64_t>(0);
        const auto g = gender ? parse_gender(*gender) : std::optional<Gender>(Gender::Unspecified);
        if (!a || !g) throw ParseError(what + ": malformed age/gender header", 0);
        demo = Demographics(static_cast<int>(*a), *g);
    }
    FeatureTable out{FeatureMatrix(t.require("subject_id", what), demo), RejectionMode::FoldFrozen};
    if (const auto* mode = t.find("rejection")) {
        const auto m = parse_rejection_mode(*mode);
        if (!m) throw ParseError(what + ": unknown rejection mode '" + *mode + "'", 0);
        out.rejection = *m;
    }
    for (const auto& [line, epoch, row, label] : rows) {
        try {
            out.matrix.add_row(epoch, row, label);
        } catch (const ValidationError& e) {
            throw ParseError(what + ": " + e.what(), line);
        }
    }
    return out;
}

void write_feature_table(const FeatureMatrix& matrix, const fs::path& path, RejectionMode mode) {
    text::write_file(path, format_feature_table(matrix, mode));
}

FeatureTable read_feature_table(const fs::path& path) {
    return parse_feature_table(text::read_file(path), path.string());
}

}  // namespace ppgsleep
