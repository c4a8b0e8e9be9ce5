#pragma once

#include "rfhgn/experiments.hpp"
#include "rfhgn/network.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace rfhgn {

class ModelIoError : public std::runtime_error {
public:
    enum class Kind {
        io,
        parse,
        truncated,
        unsupported_version,
        missing_field,
        bad_field,
        dim_mismatch,
    };

    ModelIoError(Kind kind, std::string field, const std::string& what);

    Kind kind() const { return kind_; }
    /// Offending field path, empty when not tied to a field.
    const std::string& field() const { return field_; }

private:
    Kind kind_;
    std::string field_;
};

const char* to_string(ModelIoError::Kind kind);

inline constexpr int kModelFormatVersion = 1;

std::string model_to_string(const ModelParams& params);
ModelParams model_from_string(const std::string& text);
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

/// Dataset directory: train.csv, test.csv and dataset.json (system and anchors).
struct StoredData {
    SystemConfig system;
    GeneratedData data;
};

void write_samples_csv(const Dataset& ds, const std::filesystem::path& path);
/// Reads samples written by write_samples_csv; `topo` must match the header.
std::vector<Sample> read_samples_csv(const GraphTopology& topo, const std::filesystem::path& path);
void write_dataset_dir(const SystemConfig& system, const GeneratedData& data, const std::filesystem::path& dir);
StoredData read_dataset_dir(const std::filesystem::path& dir);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Config documents may set "preset" to start from a built-in configuration;
/// any other key overrides it.
std::string config_to_string(const RunConfig& cfg);
RunConfig config_from_string(const std::string& text);
/// Preset name or path to a config document.
RunConfig load_config(const std::string& name_or_path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace rfhgn
