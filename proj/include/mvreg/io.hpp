#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvreg/geometry.hpp"
#include "mvreg/multiview.hpp"

namespace mvreg {

enum class CloudFormat {
    /// Chosen from the extension; PLY input is further resolved from its header.
    automatic,
    ply_ascii,
    ply_binary,
    xyz,
};

/// Reads vertex positions. Other vertex properties and other elements are
/// skipped. Throws IoError when the file cannot be opened, ParseError on a
/// malformed header or body and UnsupportedFormat for unknown extensions,
/// big-endian PLY or non-float coordinates.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format = CloudFormat::automatic);

/// Writes through a temporary file renamed into place. Automatic selects
/// binary PLY for ".ply" and XYZ for ".xyz"/".txt". ASCII output keeps 17
/// significant digits. Throws IoError.
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                CloudFormat format = CloudFormat::automatic);

/// Scan files (.ply, .xyz) directly inside `dir`, sorted by file name.
std::vector<std::filesystem::path> list_scans(const std::filesystem::path& dir);

struct TransformRecord {
    /// Scan identifier, usually the file name.
    std::string id;
    RigidTransformd transform;
    double tmse = 0.0;
    int pass = 0;
    ScanStatus status = ScanStatus::registered;
};

/// One `[scan]` block per record with fields id, status, pass, tmse,
/// rotation (9 values, row-major) and translation (3 values).
std::string format_transforms(const std::vector<TransformRecord>& records);

/// Throws ParseError naming the offending field, or the line for syntax
/// errors. Rotations must be orthonormal with determinant +1 within 1e-6.
std::vector<TransformRecord> parse_transforms(const std::string& text);

void save_transforms(const std::vector<TransformRecord>& records, const std::filesystem::path& path);
std::vector<TransformRecord> load_transforms(const std::filesystem::path& path);

/// Whole-file write through a temporary sibling and rename. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace mvreg
