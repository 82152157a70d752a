#include "fognet/manifest.hpp"

#include <fstream>

#include "json.hpp"

#include "fognet/errors.hpp"

namespace fognet {

std::string to_string(FogIntensity v) { return v == FogIntensity::Light ? "light" : "dense"; }
std::string to_string(Split v) { return v == Split::Train ? "train" : "test"; }

FogIntensity parse_intensity(const std::string& s) {
    if (s == "light") return FogIntensity::Light;
    if (s == "dense") return FogIntensity::Dense;
    throw ParameterError("unknown fog intensity '" + s + "' (expected light|dense)");
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw ParameterError("unknown split '" + s + "' (expected train|test)");
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("manifest: cannot open " + path.string() + " for writing");
    for (const ManifestEntry& e : entries) {
        nlohmann::ordered_json j;
        j["id"] = e.id;
        j["foggy_path"] = e.foggy_path;
        j["clean_path"] = e.clean_path;
        j["label"] = e.label;
        j["label_name"] = e.label_name;
        j["intensity"] = to_string(e.intensity);
        j["view"] = e.view;
        j["split"] = to_string(e.split);
        os << j.dump() << "\n";
    }
    if (!os) throw IoError("manifest: short write to " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("manifest: cannot open " + path.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& ex) {
            throw IoError("manifest: " + path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
        ManifestEntry e;
        try {
            e.id = j.at("id").get<std::string>();
            e.foggy_path = j.at("foggy_path").get<std::string>();
            e.clean_path = j.at("clean_path").get<std::string>();
            e.label = j.at("label").get<std::size_t>();
            e.label_name = j.at("label_name").get<std::string>();
            e.intensity = parse_intensity(j.at("intensity").get<std::string>());
            e.view = j.at("view").get<int>();
            e.split = parse_split(j.at("split").get<std::string>());
        } catch (const nlohmann::json::exception& ex) {
            throw IoError("manifest: " + path.string() + ":" + std::to_string(lineno) +
                          ": missing or malformed field: " + ex.what());
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::size_t num_classes(const std::vector<ManifestEntry>& entries) {
    std::size_t max_label = 0;
    for (const ManifestEntry& e : entries) max_label = std::max(max_label, e.label);
    return entries.empty() ? 0 : max_label + 1;
}

} // namespace fognet
