#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "knock/error.hpp"
#include "knock/signal.hpp"

namespace knock {

/// One dataset row: a WAV path plus label and provenance metadata.
struct ManifestEntry {
    std::string path;
    Maturity label = Maturity::premature;
    Provenance provenance = Provenance::original;
    std::string source_id;
};

/**
 * Dataset manifest, serialized as CSV with header
 * `path,label,provenance,source_id`. Paths may be absolute or relative to
 * the manifest file's directory.
 */
class Manifest {
public:
    Manifest() = default;

    void add(ManifestEntry entry) {
        if (!paths_.insert(entry.path).second)
            throw ArgumentError("duplicate manifest path: " + entry.path);
        entries_.push_back(std::move(entry));
    }

    const std::vector<ManifestEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const ManifestEntry& operator[](std::size_t i) const { return entries_[i]; }

    std::array<std::size_t, 3> class_counts() const {
        std::array<std::size_t, 3> counts{0, 0, 0};
        for (const auto& e : entries_) counts[static_cast<int>(e.label)]++;
        return counts;
    }

    /// Directory the manifest was loaded from; "" for in-memory manifests.
    const std::string& base_dir() const { return base_dir_; }

    /// Resolve an entry path against base_dir (absolute paths pass through).
    std::string resolve(const ManifestEntry& e) const {
        std::filesystem::path p(e.path);
        if (p.is_absolute() || base_dir_.empty()) return e.path;
        return (std::filesystem::path(base_dir_) / p).string();
    }

    static Manifest load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open manifest: " + path);
        Manifest m;
        m.base_dir_ = std::filesystem::path(path).parent_path().string();
        std::string line;
        if (!std::getline(in, line)) throw FormatError("empty manifest: " + path);
        if (trim(line) != "path,label,provenance,source_id")
            throw FormatError("bad manifest header in " + path + ": " + line);
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            std::stringstream ss(line);
            std::string p, lab, prov, src;
            if (!std::getline(ss, p, ',') || !std::getline(ss, lab, ',') ||
                !std::getline(ss, prov, ',') || !std::getline(ss, src))
                throw FormatError("bad manifest row " + std::to_string(lineno) +
                                  " in " + path);
            ManifestEntry e;
            e.path = trim(p);
            e.label = maturity_from_int(std::stoi(trim(lab)));
            e.provenance = provenance_from_string(trim(prov));
            e.source_id = trim(src);
            m.add(std::move(e));
        }
        return m;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write manifest: " + path);
        out << "path,label,provenance,source_id\n";
        for (const auto& e : entries_)
            out << e.path << ',' << static_cast<int>(e.label) << ','
                << to_string(e.provenance) << ',' << e.source_id << '\n';
        if (!out) throw IoError("manifest write failed: " + path);
    }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    std::vector<ManifestEntry> entries_;
    std::unordered_set<std::string> paths_;
    std::string base_dir_;
};

} // namespace knock
