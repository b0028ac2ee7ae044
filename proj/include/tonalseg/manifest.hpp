#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tonalseg/error.hpp"

namespace tonalseg {

enum class SplitTag { Train, Val, Test, Unassigned };

std::string_view to_string(SplitTag tag) noexcept;
SplitTag parse_split_tag(std::string_view text);

struct ManifestEntry {
    std::string image_id;
    std::filesystem::path image_path;
    std::optional<std::filesystem::path> mask_path;
    SplitTag split = SplitTag::Unassigned;

    bool operator==(const ManifestEntry&) const = default;
};

/// Ordered dataset listing with unique image ids.
class Manifest {
public:
    Manifest() = default;
    explicit Manifest(std::vector<ManifestEntry> entries);

    const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    Manifest select(SplitTag tag) const;
    std::size_t count(SplitTag tag) const noexcept;
    const ManifestEntry* find(std::string_view image_id) const noexcept;

    bool operator==(const Manifest&) const = default;

private:
    std::vector<ManifestEntry> entries_;
};

/// Split selection used by CLI commands: one tag, or every entry.
struct Selection {
    std::optional<SplitTag> tag;  ///< nullopt selects all entries

    static Selection parse(std::string_view text);
    Manifest apply(const Manifest& m) const;
};

// Line format, one record per line, tab separated:
//   image_id <TAB> image_path <TAB> mask_path|- <TAB> train|val|test|unassigned
// Blank lines and lines starting with '#' are skipped. A JSON document
// {"entries": [{"id", "image", "mask", "split"}, ...]} is also accepted.
// Relative paths are resolved against base_dir.
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

/// Line format. Paths are written relative to base_dir.
std::string format_manifest(const Manifest& m, const std::filesystem::path& base_dir);

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

}  // namespace tonalseg
