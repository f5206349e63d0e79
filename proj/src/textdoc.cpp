#include "egomd/textdoc.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "egomd/errors.hpp"

namespace egomd {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

std::string strip_comment(const std::string& line) {
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& msg) {
    throw UserError(path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

bool Section::has(const std::string& key) const { return find(key) != nullptr; }

const KeyValue* Section::find(const std::string& key) const {
    for (const auto& kv : entries)
        if (kv.key == key) return &kv;
    return nullptr;
}

const KeyValue& Section::require(const std::string& key) const {
    const KeyValue* kv = find(key);
    if (!kv) {
        const std::string where = name.empty() ? "top level" : "[" + name + "]";
        throw UserError("missing key '" + key + "' in " + where);
    }
    return *kv;
}

std::string Section::get_string(const std::string& key) const {
    const KeyValue& kv = require(key);
    if (kv.tokens.empty()) throw UserError("key '" + key + "' has no value (line " + std::to_string(kv.line) + ")");
    return kv.tokens[0];
}

std::string Section::get_string(const std::string& key, const std::string& fallback) const {
    const KeyValue* kv = find(key);
    return kv && !kv->tokens.empty() ? kv->tokens[0] : fallback;
}

double Section::get_number(const std::string& key, const std::string& unit) const {
    const KeyValue& kv = require(key);
    if (kv.tokens.empty()) throw UserError("key '" + key + "' has no value (line " + std::to_string(kv.line) + ")");
    const double v = parse_number(kv.tokens[0], key);
    if (!unit.empty() && kv.tokens.size() > 1 && kv.tokens[1] != unit)
        throw UserError("key '" + key + "': expected unit '" + unit + "', got '" + kv.tokens[1] +
                        "' (line " + std::to_string(kv.line) + ")");
    return v;
}

double Section::get_number(const std::string& key, double fallback, const std::string& unit) const {
    return has(key) ? get_number(key, unit) : fallback;
}

long Section::get_integer(const std::string& key) const {
    const double v = get_number(key);
    const long n = static_cast<long>(v);
    if (static_cast<double>(n) != v) throw UserError("key '" + key + "': expected an integer");
    return n;
}

long Section::get_integer(const std::string& key, long fallback) const {
    return has(key) ? get_integer(key) : fallback;
}

bool Section::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw UserError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<const Section*> TextDoc::sections_named(const std::string& name) const {
    std::vector<const Section*> out;
    for (const auto& s : sections)
        if (s.name == name) out.push_back(&s);
    return out;
}

const Section* TextDoc::first_section(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

double parse_number(const std::string& token, const std::string& context) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(token, &consumed);
        if (consumed != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw UserError("'" + context + "': cannot parse number from '" + token + "'");
    }
}

TextDoc parse_textdoc(const std::string& content, const std::string& path) {
    TextDoc doc;
    doc.path = path;
    Section* current = &doc.top;

    std::istringstream is(content);
    std::string raw;
    int line_no = 0;
    bool format_seen = false;
    while (std::getline(is, raw)) {
        ++line_no;
        const std::string line = strip_comment(raw);
        if (blank(line)) continue;

        auto first = line.find_first_not_of(" \t");
        if (line[first] == '[') {
            const auto close = line.find(']');
            if (close == std::string::npos) fail(path, line_no, "unterminated section header");
            auto args = tokenize(line.substr(first + 1, close - first - 1));
            if (args.empty()) fail(path, line_no, "empty section header");
            Section s;
            s.name = args[0];
            s.args.assign(args.begin() + 1, args.end());
            s.line = line_no;
            doc.sections.push_back(std::move(s));
            current = &doc.sections.back();
            continue;
        }

        auto toks = tokenize(line);
        if (!format_seen && toks.size() >= 2 && toks[0] == "format") {
            doc.format = toks[1];
            doc.version = toks.size() > 2 ? static_cast<int>(parse_number(toks[2], "format version")) : 1;
            format_seen = true;
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(path, line_no, "expected 'key = value'");
        KeyValue kv;
        kv.line = line_no;
        auto key_toks = tokenize(line.substr(0, eq));
        if (key_toks.size() != 1) fail(path, line_no, "malformed key");
        kv.key = key_toks[0];
        kv.tokens = tokenize(line.substr(eq + 1));
        current->entries.push_back(std::move(kv));
    }
    return doc;
}

TextDoc load_textdoc(const std::string& path) { return parse_textdoc(read_file(path), path); }

void expect_format(const TextDoc& doc, const std::string& format, int max_version) {
    if (doc.format != format)
        throw UserError(doc.path + ": expected format '" + format + "', found '" +
                        (doc.format.empty() ? "(none)" : doc.format) + "'");
    if (doc.version < 1 || doc.version > max_version)
        throw UserError(doc.path + ": unsupported " + format + " version " + std::to_string(doc.version));
}

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_hash(const std::string& path) { return content_hash(read_file(path)); }

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UserError("cannot open file: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw UserError("cannot write file: " + tmp.string());
        f << content;
        f.flush();
        if (!f) throw UserError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw UserError("rename failed for " + target.string() + ": " + ec.message());
}

}  // namespace egomd
