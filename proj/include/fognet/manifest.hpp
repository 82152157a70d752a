#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace fognet {

enum class FogIntensity { Light, Dense };
enum class Split { Train, Test };

std::string to_string(FogIntensity v);
std::string to_string(Split v);
FogIntensity parse_intensity(const std::string& s);
Split parse_split(const std::string& s);

/// One dataset sample: a foggy/clean clip pair bound to a label plus
/// intensity/view/split metadata. Paths are clip stems relative to the
/// manifest's directory; the payload files are "<stem>.frames.fvt" and
/// "<stem>.depth.fvt".
struct ManifestEntry {
    std::string id;
    std::string foggy_path;
    std::string clean_path;
    std::size_t label = 0;
    std::string label_name;
    FogIntensity intensity = FogIntensity::Light;
    int view = 0;
    Split split = Split::Train;
};

/// Line-delimited JSON, one entry per line, keys in schema order.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

std::size_t num_classes(const std::vector<ManifestEntry>& entries);

} // namespace fognet
