#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "ensrec/types.hpp"

namespace ensrec::testing {

// Users in a few taste clusters; each cluster favours its own block of items
// plus a popular head, so the neighbourhood models have signal to find.
inline std::vector<InteractionRecord> synthetic_records(int n_users, int n_items,
                                                        std::uint64_t seed,
                                                        int min_len = 2, int max_len = 40) {
  std::mt19937_64 rng(seed);
  const int clusters = 5;
  const int block = std::max(1, n_items / clusters);
  std::uniform_int_distribution<int> length(min_len, max_len);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<InteractionRecord> out;
  char name[32];
  for (int u = 0; u < n_users; ++u) {
    const int c = u % clusters;
    const int want = std::min(length(rng), n_items);
    std::vector<int> items;
    while (static_cast<int>(items.size()) < want) {
      int item;
      const double r = unit(rng);
      if (r < 0.6) {
        item = c * block + static_cast<int>(unit(rng) * unit(rng) * block);
      } else if (r < 0.8) {
        item = static_cast<int>(unit(rng) * unit(rng) * unit(rng) * n_items);
      } else {
        item = static_cast<int>(unit(rng) * n_items);
      }
      item = std::min(item, n_items - 1);
      if (std::find(items.begin(), items.end(), item) == items.end()) items.push_back(item);
    }
    for (int item : items) {
      InteractionRecord rec;
      std::snprintf(name, sizeof name, "u%04d", u);
      rec.user = name;
      std::snprintf(name, sizeof name, "i%04d", item);
      rec.item = name;
      rec.rating = 1.0 + static_cast<double>(rng() % 5);
      rec.timestamp = 1000000 + static_cast<std::int64_t>(rng() % 100000);
      out.push_back(rec);
    }
  }
  return out;
}

inline void write_records_csv(const std::vector<InteractionRecord>& records,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "user,item,rating,timestamp\n";
  for (const auto& r : records)
    out << r.user << ',' << r.item << ',' << static_cast<int>(*r.rating) << ',' << *r.timestamp
        << '\n';
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ensrec_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace ensrec::testing
