#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ope/dataset.hpp"

namespace ope {

// Column mapping for bandit CSV files. Context columns are every column whose
// name starts with `context_prefix`, ordered by their numeric suffix.
struct CsvSchema {
  double reward_max = 1.0;
  std::string context_prefix = "x_";
  std::string action_column = "action";
  std::string reward_column = "reward";
  std::string propensity_prefix = "p0_";
  // Used when the file carries only the logged action's propensity.
  std::string logged_propensity_column = "propensity";
  std::string cluster_column = "cluster";
  std::string embedding_column = "embedding";
  // Required with a single propensity column; otherwise the count of p0_ columns.
  std::optional<std::size_t> num_actions;
  // Defaults to max(cluster) + 1.
  std::optional<std::size_t> num_clusters;
};

BanditDataset load_bandit_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
BanditDataset read_bandit_csv(std::istream& in, const CsvSchema& schema = {});

// Writes the full propensity rows when present, the logged propensity otherwise.
void write_bandit_csv(const std::filesystem::path& path, const BanditDataset& d,
                      const CsvSchema& schema = {});
void write_bandit_csv(std::ostream& out, const BanditDataset& d, const CsvSchema& schema = {});

// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);

}  // namespace ope
