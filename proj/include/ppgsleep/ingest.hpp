#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ppgsleep/types.hpp"

namespace ppgsleep {

inline constexpr const char* kManifestFormat = "ppgsleep-manifest/1";
inline constexpr const char* kFeatureTableFormat = "ppgsleep-features/1";

struct ManifestEntry {
    std::string subject_id;
    std::filesystem::path ppg;       // resolved against the manifest directory
    std::filesystem::path activity;
    std::filesystem::path stages;
    Demographics demographics;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::string format_version;
    std::vector<ManifestEntry> entries;
    std::vector<std::string> warnings;
};

/// Reads manifest.csv (columns subject_id,ppg,activity,stages,age,gender).
/// Throws IoError naming subject and path for a referenced file that does not
/// exist, ValidationError for duplicate subject ids or bad demographics and
/// ParseError for malformed rows. An empty manifest is valid and carries a
/// warning.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Loads and validates one subject. The PPG is truncated at the tail to
/// whole 30 s epochs and the label and activity series must have exactly
/// that many entries.
SubjectRecord load_subject(const ManifestEntry& entry);

// Writers for the same formats (used by the synthetic generator).
void write_ppg_file(const std::filesystem::path& path, const std::string& subject_id, double fs_hz,
                    std::span<const double> samples);
void write_activity_file(const std::filesystem::path& path, const std::string& subject_id,
                         std::span<const double> counts);
void write_stages_file(const std::filesystem::path& path, const std::string& subject_id,
                       std::span<const StageLabel> stages);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

// How the windows of a feature table were filtered before writing.
enum class RejectionMode { FoldFrozen, Global };

std::string_view to_string(RejectionMode mode) noexcept;
std::optional<RejectionMode> parse_rejection_mode(std::string_view s) noexcept;

struct FeatureTable {
    FeatureMatrix matrix;
    RejectionMode rejection = RejectionMode::FoldFrozen;
};

std::string format_feature_table(const FeatureMatrix& matrix, RejectionMode mode = RejectionMode::FoldFrozen);
FeatureTable parse_feature_table(std::string_view content, std::string_view what = "feature table");

/// Columns epoch,hr_bpm,hrv_s,act,label (label S or W). Doubles are written
/// in shortest round-trip form so read(write(m)) == m.
void write_feature_table(const FeatureMatrix& matrix, const std::filesystem::path& path,
                         RejectionMode mode = RejectionMode::FoldFrozen);
FeatureTable read_feature_table(const std::filesystem::path& path);

}  // namespace ppgsleep
