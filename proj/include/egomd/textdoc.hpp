#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace egomd {

// Line-based structured text shared by every egomd file format:
//
//   # comment
//   format <name> <version>
//   top_key = value [unit]
//   [section arg1 arg2]
//   key = tok tok tok   # unit tokens are ordinary tokens, validated by schema
//
// Repeated keys are preserved in order (e.g. several `gauss =` rows).

struct KeyValue {
    std::string key;
    std::vector<std::string> tokens;
    int line = 0;
};

struct Section {
    std::string name;                 // empty for the top-level section
    std::vector<std::string> args;
    std::vector<KeyValue> entries;
    int line = 0;

    bool has(const std::string& key) const;
    const KeyValue* find(const std::string& key) const;
    // Throws UserError naming the file line when the key is missing.
    const KeyValue& require(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    // Parses the first token as a number; when `unit` is non-empty and a
    // second token is present it must match.
    double get_number(const std::string& key, const std::string& unit = "") const;
    double get_number(const std::string& key, double fallback, const std::string& unit = "") const;
    long get_integer(const std::string& key) const;
    long get_integer(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
};

struct TextDoc {
    std::string format;
    int version = 0;
    Section top;
    std::vector<Section> sections;
    std::string path;  // for diagnostics; may be "<string>"

    std::vector<const Section*> sections_named(const std::string& name) const;
    const Section* first_section(const std::string& name) const;
};

TextDoc parse_textdoc(const std::string& content, const std::string& path);
TextDoc load_textdoc(const std::string& path);
// Throws UserError unless the document's format line matches.
void expect_format(const TextDoc& doc, const std::string& format, int max_version);

double parse_number(const std::string& token, const std::string& context);

// FNV-1a 64-bit over raw bytes, rendered as 16 hex digits.
std::string content_hash(const std::string& bytes);
std::string file_hash(const std::string& path);

std::string read_file(const std::string& path);
// write-temp-then-rename in the destination directory
void atomic_write(const std::string& path, const std::string& content);

}  // namespace egomd
