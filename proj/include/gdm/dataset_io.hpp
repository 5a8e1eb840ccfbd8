#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gdm/errors.hpp"
#include "gdm/metrics.hpp"
#include "gdm/pgm.hpp"

namespace gdm {

/// Writes a directory of greymaps (0000.pgm, 0001.pgm, ...) plus index.json.
/// Vectors are in [-1,1]; the PGM mapping quantises to 8 bits.
inline void save_images_dir(const std::string& dir, const std::vector<std::vector<double>>& images,
                            int height, int width) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);
    char name[32];
    for (std::size_t i = 0; i < images.size(); ++i) {
        std::snprintf(name, sizeof(name), "%04zu.pgm", i);
        write_pgm(dir + "/" + name, height, width, images[i]);
    }
    nlohmann::json index;
    index["count"] = images.size();
    index["height"] = height;
    index["width"] = width;
    std::ofstream os(dir + "/index.json");
    if (!os) throw IoError("cannot write index: " + dir);
    os << index.dump(2) << "\n";
}

/// Loads every .pgm in a directory, sorted by filename.
inline std::vector<Image> load_images_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".pgm") names.push_back(entry.path().string());
    }
    std::sort(names.begin(), names.end());
    std::vector<Image> images;
    images.reserve(names.size());
    for (const auto& n : names) images.push_back(read_pgm(n));
    return images;
}

} // namespace gdm
