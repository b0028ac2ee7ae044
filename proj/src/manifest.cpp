#include "tonalseg/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tonalseg {

namespace fs = std::filesystem;

std::string_view to_string(SplitTag tag) noexcept {
    switch (tag) {
        case SplitTag::Train: return "train";
        case SplitTag::Val: return "val";
        case SplitTag::Test: return "test";
        case SplitTag::Unassigned: return "unassigned";
    }
    return "unassigned";
}

SplitTag parse_split_tag(std::string_view text) {
    if (text == "train") return SplitTag::Train;
    if (text == "val") return SplitTag::Val;
    if (text == "test") return SplitTag::Test;
    if (text == "unassigned" || text.empty()) return SplitTag::Unassigned;
    throw Error(ErrorCode::FormatError, "unknown split tag '" + std::string(text) + "'");
}

Manifest::Manifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
    std::set<std::string_view> seen;
    for (const auto& e : entries_) {
        if (e.image_id.empty()) throw Error(ErrorCode::FormatError, "empty image id");
        if (!seen.insert(e.image_id).second) {
            throw Error(ErrorCode::FormatError, "duplicate image id '" + e.image_id + "'");
        }
    }
}

Manifest Manifest::select(SplitTag tag) const {
    std::vector<ManifestEntry> out;
    std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
                 [tag](const ManifestEntry& e) { return e.split == tag; });
    return Manifest(std::move(out));
}

std::size_t Manifest::count(SplitTag tag) const noexcept {
    return static_cast<std::size_t>(std::count_if(
        entries_.begin(), entries_.end(), [tag](const ManifestEntry& e) { return e.split == tag; }));
}

const ManifestEntry* Manifest::find(std::string_view image_id) const noexcept {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const ManifestEntry& e) { return e.image_id == image_id; });
    return it == entries_.end() ? nullptr : &*it;
}

Selection Selection::parse(std::string_view text) {
    if (text == "all") return {};
    return {parse_split_tag(text)};
}

Manifest Selection::apply(const Manifest& m) const { return tag ? m.select(*tag) : m; }

namespace {

fs::path resolve(const fs::path& base_dir, const std::string& text) {
    fs::path p(text);
    return p.is_absolute() || base_dir.empty() ? p : (base_dir / p).lexically_normal();
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

Manifest parse_json_manifest(std::string_view text, const fs::path& base_dir) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!doc.contains("entries") || !doc["entries"].is_array()) {
        throw Error(ErrorCode::FormatError, "JSON manifest needs an \"entries\" array");
    }
    std::vector<ManifestEntry> entries;
    for (const json& row : doc["entries"]) {
        if (!row.is_object() || !row.contains("id") || !row.contains("image")) {
            throw Error(ErrorCode::FormatError, "manifest entries need \"id\" and \"image\"");
        }
        ManifestEntry e;
        e.image_id = row["id"].get<std::string>();
        e.image_path = resolve(base_dir, row["image"].get<std::string>());
        if (row.contains("mask") && row["mask"].is_string()) {
            e.mask_path = resolve(base_dir, row["mask"].get<std::string>());
        }
        if (row.contains("split")) e.split = parse_split_tag(row["split"].get<std::string>());
        entries.push_back(std::move(e));
    }
    return Manifest(std::move(entries));
}

std::string relative_text(const fs::path& p, const fs::path& base_dir) {
    const fs::path rel = fs::absolute(p).lexically_normal().lexically_relative(
        fs::absolute(base_dir.empty() ? fs::path(".") : base_dir).lexically_normal());
    return rel.empty() ? fs::absolute(p).generic_string() : rel.generic_string();
}

}  // namespace

Manifest parse_manifest(std::string_view text, const fs::path& base_dir) {
    const std::string head = trim(text.substr(0, 64));
    if (!head.empty() && head.front() == '{') return parse_json_manifest(text, base_dir);

    std::vector<ManifestEntry> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;

        std::vector<std::string> fields;
        std::istringstream cols(t);
        std::string field;
        while (std::getline(cols, field, '\t')) fields.push_back(trim(field));
        if (fields.size() < 2 || fields.size() > 4) {
            throw Error(ErrorCode::FormatError, "manifest line " + std::to_string(line_no) +
                                                    ": expected 2 to 4 tab-separated fields");
        }
        ManifestEntry e;
        e.image_id = fields[0];
        e.image_path = resolve(base_dir, fields[1]);
        if (fields.size() > 2 && !fields[2].empty() && fields[2] != "-") {
            e.mask_path = resolve(base_dir, fields[2]);
        }
        if (fields.size() > 3) e.split = parse_split_tag(fields[3]);
        entries.push_back(std::move(e));
    }
    return Manifest(std::move(entries));
}

std::string format_manifest(const Manifest& m, const fs::path& base_dir) {
    std::ostringstream out;
    out << "# image_id\timage\tmask\tsplit\n";
    for (const auto& e : m.entries()) {
        out << e.image_id << '\t' << relative_text(e.image_path, base_dir) << '\t'
            << (e.mask_path ? relative_text(*e.mask_path, base_dir) : std::string("-")) << '\t'
            << to_string(e.split) << '\n';
    }
    return out.str();
}

Manifest load_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, "cannot read manifest " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str(), path.parent_path());
}

void save_manifest(const Manifest& m, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write manifest " + path.string());
    out << format_manifest(m, path.parent_path());
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace tonalseg
