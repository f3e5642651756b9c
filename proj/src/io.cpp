#include "mvreg/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace mvreg {

namespace fs = std::filesystem;

namespace {

std::string lower_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

bool parse_double(const std::string& tok, double& out) {
    const char* first = tok.data();
    const char* last = first + tok.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_size(const std::string& tok, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

// ---------------------------------------------------------------- PLY header

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<PlyType> ply_type(const std::string& name) {
    static const std::map<std::string, PlyType> table = {
        {"char", PlyType::i8},    {"int8", PlyType::i8},     {"uchar", PlyType::u8},    {"uint8", PlyType::u8},
        {"short", PlyType::i16},  {"int16", PlyType::i16},   {"ushort", PlyType::u16},  {"uint16", PlyType::u16},
        {"int", PlyType::i32},    {"int32", PlyType::i32},   {"uint", PlyType::u32},    {"uint32", PlyType::u32},
        {"float", PlyType::f32},  {"float32", PlyType::f32}, {"double", PlyType::f64},  {"float64", PlyType::f64},
    };
    auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

std::size_t type_size(PlyType t) {
    switch (t) {
        case PlyType::i8:
        case PlyType::u8: return 1;
        case PlyType::i16:
        case PlyType::u16: return 2;
        case PlyType::i32:
        case PlyType::u32:
        case PlyType::f32: return 4;
        case PlyType::f64: return 8;
    }
    return 0;
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::f32;
    bool is_list = false;
    PlyType count_type = PlyType::u8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

struct PlyHeader {
    bool binary = false;
    std::vector<PlyElement> elements;
};

PlyHeader read_ply_header(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply" || split_ws(line) != std::vector<std::string>{"ply"}) {
        throw ParseError("PLY: missing 'ply' magic line");
    }
    PlyHeader h;
    bool have_format = false;
    for (;;) {
        if (!std::getline(in, line)) throw ParseError("PLY: header ends before end_header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        const std::string& key = tok[0];
        if (key == "end_header") break;
        if (key == "comment" || key == "obj_info") continue;
        if (key == "format") {
            if (tok.size() != 3) throw ParseError("PLY: malformed format line");
            if (tok[1] == "ascii") h.binary = false;
            else if (tok[1] == "binary_little_endian") h.binary = true;
            else if (tok[1] == "binary_big_endian") throw UnsupportedFormat("PLY: big-endian files are not supported");
            else throw ParseError("PLY: unknown format '" + tok[1] + "'");
            have_format = true;
        } else if (key == "element") {
            PlyElement e;
            if (tok.size() != 3 || !parse_size(tok[2], e.count)) throw ParseError("PLY: malformed element line: " + line);
            e.name = tok[1];
            h.elements.push_back(std::move(e));
        } else if (key == "property") {
            if (h.elements.empty()) throw ParseError("PLY: property before any element");
            PlyProperty p;
            if (tok.size() == 5 && tok[1] == "list") {
                auto ct = ply_type(tok[2]);
                auto vt = ply_type(tok[3]);
                if (!ct || !vt) throw ParseError("PLY: unknown list type in: " + line);
                p.is_list = true;
                p.count_type = *ct;
                p.type = *vt;
                p.name = tok[4];
            } else if (tok.size() == 3) {
                auto t = ply_type(tok[1]);
                if (!t) throw ParseError("PLY: unknown property type '" + tok[1] + "'");
                p.type = *t;
                p.name = tok[2];
            } else {
                throw ParseError("PLY: malformed property line: " + line);
            }
            h.elements.back().properties.push_back(std::move(p));
        } else {
            throw ParseError("PLY: unexpected header line: " + line);
        }
    }
    if (!have_format) throw ParseError("PLY: missing format line");
    return h;
}

// ------------------------------------------------------------------ PLY body

template <typename T>
T read_le(std::istream& in) {
    std::array<char, sizeof(T)> buf;
    if (!in.read(buf.data(), sizeof(T))) throw ParseError("PLY: binary body is truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    T v;
    std::memcpy(&v, buf.data(), sizeof(T));
    return v;
}

double read_binary_value(std::istream& in, PlyType t) {
    switch (t) {
        case PlyType::i8: return read_le<std::int8_t>(in);
        case PlyType::u8: return read_le<std::uint8_t>(in);
        case PlyType::i16: return read_le<std::int16_t>(in);
        case PlyType::u16: return read_le<std::uint16_t>(in);
        case PlyType::i32: return read_le<std::int32_t>(in);
        case PlyType::u32: return read_le<std::uint32_t>(in);
        case PlyType::f32: return read_le<float>(in);
        case PlyType::f64: return read_le<double>(in);
    }
    return 0.0;
}

std::size_t list_count(double v) {
    if (!(v >= 0.0) || v != std::floor(v)) throw ParseError("PLY: invalid list count");
    return static_cast<std::size_t>(v);
}

struct XyzSlots {
    std::array<std::size_t, 3> index{};
};

XyzSlots vertex_slots(const PlyElement& e) {
    XyzSlots s;
    const char* names[3] = {"x", "y", "z"};
    for (int k = 0; k < 3; ++k) {
        auto it = std::find_if(e.properties.begin(), e.properties.end(),
                               [&](const PlyProperty& p) { return p.name == names[k]; });
        if (it == e.properties.end()) throw ParseError(std::string("PLY: vertex element has no '") + names[k] + "' property");
        if (it->is_list) throw ParseError(std::string("PLY: '") + names[k] + "' must not be a list");
        if (it->type != PlyType::f32 && it->type != PlyType::f64) {
            throw UnsupportedFormat(std::string("PLY: '") + names[k] + "' must be float or double");
        }
        s.index[static_cast<std::size_t>(k)] = static_cast<std::size_t>(it - e.properties.begin());
    }
    return s;
}

PointCloud read_ply_body(std::istream& in, const PlyHeader& h) {
    auto vit = std::find_if(h.elements.begin(), h.elements.end(), [](const PlyElement& e) { return e.name == "vertex"; });
    if (vit == h.elements.end()) throw ParseError("PLY: no vertex element");
    const XyzSlots slots = vertex_slots(*vit);
    PointCloud cloud(3, static_cast<Eigen::Index>(vit->count));

    for (const PlyElement& e : h.elements) {
        const bool is_vertex = &e == &*vit;
        std::vector<double> row(e.properties.size());
        for (std::size_t i = 0; i < e.count; ++i) {
            if (h.binary) {
                for (std::size_t k = 0; k < e.properties.size(); ++k) {
                    const PlyProperty& p = e.properties[k];
                    if (p.is_list) {
                        const std::size_t n = list_count(read_binary_value(in, p.count_type));
                        in.ignore(static_cast<std::streamsize>(n * type_size(p.type)));
                        if (!in) throw ParseError("PLY: binary body is truncated");
                    } else {
                        row[k] = read_binary_value(in, p.type);
                    }
                }
            } else {
                std::string line;
                do {
                    if (!std::getline(in, line)) {
                        throw ParseError("PLY: expected " + std::to_string(e.count) + " " + e.name + " lines, found " +
                                         std::to_string(i));
                    }
                } while (split_ws(line).empty());
                const auto tok = split_ws(line);
                std::size_t pos = 0;
                for (std::size_t k = 0; k < e.properties.size(); ++k) {
                    const PlyProperty& p = e.properties[k];
                    if (pos >= tok.size()) throw ParseError("PLY: too few values on " + e.name + " line " + std::to_string(i));
                    double v = 0.0;
                    if (!parse_double(tok[pos++], v)) throw ParseError("PLY: bad number on " + e.name + " line " + std::to_string(i));
                    if (p.is_list) {
                        pos += list_count(v);
                        if (pos > tok.size()) throw ParseError("PLY: list overruns " + e.name + " line " + std::to_string(i));
                    } else {
                        row[k] = v;
                    }
                }
                if (pos != tok.size()) throw ParseError("PLY: too many values on " + e.name + " line " + std::to_string(i));
            }
            if (is_vertex) {
                for (int d = 0; d < 3; ++d) cloud(d, static_cast<Eigen::Index>(i)) = row[slots.index[static_cast<std::size_t>(d)]];
            }
        }
        if (is_vertex) break;
    }
    return cloud;
}

PointCloud load_ply(const fs::path& path, std::optional<bool> expect_binary) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const PlyHeader h = read_ply_header(in);
    if (expect_binary && *expect_binary != h.binary) {
        throw ParseError(path.string() + ": PLY encoding differs from the requested format");
    }
    return read_ply_body(in, h);
}

PointCloud load_xyz(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() < 3) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected x y z");
        for (int k = 0; k < 3; ++k) {
            double v = 0.0;
            if (!parse_double(tok[static_cast<std::size_t>(k)], v)) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + tok[static_cast<std::size_t>(k)] + "'");
            }
            values.push_back(v);
        }
    }
    PointCloud cloud(3, static_cast<Eigen::Index>(values.size() / 3));
    std::copy(values.begin(), values.end(), cloud.data());
    return cloud;
}

CloudFormat resolve_save_format(const fs::path& path, CloudFormat format) {
    if (format != CloudFormat::automatic) return format;
    const std::string ext = lower_extension(path);
    if (ext == ".ply") return CloudFormat::ply_binary;
    if (ext == ".xyz" || ext == ".txt") return CloudFormat::xyz;
    throw UnsupportedFormat("unknown point cloud extension '" + ext + "'");
}

void append_g17(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);
    out += buf;
}

// Keeps trailing zeros so every coordinate carries 17 significant digits.
void append_coord(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%#.17g", v);
    out += buf;
}

template <typename T>
void append_le(std::string& out, T v) {
    std::array<char, sizeof(T)> buf;
    std::memcpy(buf.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    out.append(buf.data(), buf.size());
}

// ---------------------------------------------------------- transform files

constexpr const char* kTransformsMagic = "mvreg-transforms 1";

std::optional<ScanStatus> status_from_string(const std::string& s) {
    if (s == "reference") return ScanStatus::reference;
    if (s == "registered") return ScanStatus::registered;
    if (s == "unplaced") return ScanStatus::unplaced;
    return std::nullopt;
}

}  // namespace

PointCloud load_cloud(const fs::path& path, CloudFormat format) {
    if (format == CloudFormat::automatic) {
        const std::string ext = lower_extension(path);
        if (ext == ".ply") return load_ply(path, std::nullopt);
        if (ext == ".xyz" || ext == ".txt") return load_xyz(path);
        throw UnsupportedFormat("unknown point cloud extension '" + ext + "'");
    }
    if (format == CloudFormat::xyz) return load_xyz(path);
    return load_ply(path, format == CloudFormat::ply_binary);
}

void save_cloud(const PointCloud& cloud, const fs::path& path, CloudFormat format) {
    format = resolve_save_format(path, format);
    const auto n = static_cast<std::size_t>(cloud.cols());
    std::string out;
    if (format == CloudFormat::xyz) {
        out.reserve(n * 60);
        for (Eigen::Index i = 0; i < cloud.cols(); ++i) {
            append_coord(out, cloud(0, i));
            out += ' ';
            append_coord(out, cloud(1, i));
            out += ' ';
            append_coord(out, cloud(2, i));
            out += '\n';
        }
    } else {
        const bool binary = format == CloudFormat::ply_binary;
        out = "ply\nformat ";
        out += binary ? "binary_little_endian" : "ascii";
        out += " 1.0\nelement vertex " + std::to_string(n) +
               "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
        out.reserve(out.size() + n * (binary ? 24 : 60));
        for (Eigen::Index i = 0; i < cloud.cols(); ++i) {
            if (binary) {
                for (int d = 0; d < 3; ++d) append_le<double>(out, cloud(d, i));
            } else {
                append_coord(out, cloud(0, i));
                out += ' ';
                append_coord(out, cloud(1, i));
                out += ' ';
                append_coord(out, cloud(2, i));
                out += '\n';
            }
        }
    }
    write_file_atomic(path, out);
}

std::vector<fs::path> list_scans(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError(dir.string() + " is not a directory");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = lower_extension(entry.path());
        if (ext == ".ply" || ext == ".xyz") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    return out;
}

std::string format_transforms(const std::vector<TransformRecord>& records) {
    std::string out = kTransformsMagic;
    out += '\n';
    for (const auto& r : records) {
        if (r.id.empty() || r.id.find_first_of(" \t\r\n#") != std::string::npos) {
            throw InvalidArgument("transform record id must be a non-empty token without whitespace or '#'");
        }
        out += "\n[scan]\nid " + r.id + "\nstatus " + to_string(r.status) + "\npass " + std::to_string(r.pass) + "\ntmse ";
        append_g17(out, r.tmse);
        out += "\nrotation";
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                out += ' ';
                append_g17(out, r.transform.R(i, j));
            }
        }
        out += "\ntranslation";
        for (int i = 0; i < 3; ++i) {
            out += ' ';
            append_g17(out, r.transform.t(i));
        }
        out += '\n';
    }
    return out;
}

std::vector<TransformRecord> parse_transforms(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto where = [&] { return "transforms line " + std::to_string(line_no); };

    bool have_magic = false;
    std::vector<TransformRecord> out;
    std::map<std::string, std::vector<std::string>> fields;
    bool open = false;

    auto close = [&] {
        if (!open) return;
        static const char* required[] = {"id", "status", "pass", "tmse", "rotation", "translation"};
        for (const char* f : required) {
            if (!fields.count(f)) throw ParseError("transform record " + std::to_string(out.size()) + " is missing field '" + f + "'");
        }
        auto expect = [&](const char* f, std::size_t n) -> const std::vector<std::string>& {
            const auto& v = fields.at(f);
            if (v.size() != n) {
                throw ParseError("field '" + std::string(f) + "' of record " + std::to_string(out.size()) + " needs " +
                                 std::to_string(n) + " value(s)");
            }
            return v;
        };
        auto number = [&](const char* f, const std::string& tok) {
            double v = 0.0;
            if (!parse_double(tok, v) || !std::isfinite(v)) {
                throw ParseError("field '" + std::string(f) + "' of record " + std::to_string(out.size()) + " has bad value '" + tok + "'");
            }
            return v;
        };
        TransformRecord r;
        r.id = expect("id", 1)[0];
        const auto st = status_from_string(expect("status", 1)[0]);
        if (!st) throw ParseError("field 'status' of record " + std::to_string(out.size()) + " is not a known status");
        r.status = *st;
        {
            const std::string& tok = expect("pass", 1)[0];
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), r.pass);
            if (ec != std::errc() || ptr != tok.data() + tok.size()) {
                throw ParseError("field 'pass' of record " + std::to_string(out.size()) + " has bad value '" + tok + "'");
            }
        }
        r.tmse = number("tmse", expect("tmse", 1)[0]);
        const auto& rot = expect("rotation", 9);
        for (int i = 0; i < 9; ++i) r.transform.R(i / 3, i % 3) = number("rotation", rot[static_cast<std::size_t>(i)]);
        const auto& tr = expect("translation", 3);
        for (int i = 0; i < 3; ++i) r.transform.t(i) = number("translation", tr[static_cast<std::size_t>(i)]);
        if (!r.transform.is_valid(1e-6)) {
            throw ParseError("field 'rotation' of record " + std::to_string(out.size()) + " is not a rotation");
        }
        out.push_back(std::move(r));
        fields.clear();
        open = false;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (!have_magic) {
            if (tok != split_ws(kTransformsMagic)) throw ParseError(where() + ": expected '" + kTransformsMagic + "'");
            have_magic = true;
            continue;
        }
        if (tok.size() == 1 && tok[0] == "[scan]") {
            close();
            open = true;
            continue;
        }
        if (!open) throw ParseError(where() + ": field outside a [scan] block");
        const std::string key = tok[0];
        if (fields.count(key)) throw ParseError(where() + ": duplicate field '" + key + "'");
        tok.erase(tok.begin());
        fields.emplace(key, std::move(tok));
    }
    if (!have_magic) throw ParseError("transforms: missing '" + std::string(kTransformsMagic) + "' header");
    close();
    return out;
}

void save_transforms(const std::vector<TransformRecord>& records, const fs::path& path) {
    write_file_atomic(path, format_transforms(records));
}

std::vector<TransformRecord> load_transforms(const fs::path& path) { return parse_transforms(read_file(path)); }

void write_file_atomic(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace mvreg
