#include "ope/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

#include "ope/errors.hpp"

namespace ope {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view s, std::size_t line, std::string_view column) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("column '" + std::string(column) + "': cannot parse '" + std::string(s) + "' as a number", line);
  return v;
}

long long parse_int(std::string_view s, std::size_t line, std::string_view column) {
  s = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("column '" + std::string(column) + "': cannot parse '" + std::string(s) + "' as an integer", line);
  return v;
}

// Columns named prefix + <index>, ordered by index; indices must be 0..k-1.
std::vector<std::size_t> indexed_columns(const std::vector<std::string>& header, const std::string& prefix) {
  std::map<long long, std::size_t> found;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& name = header[c];
    if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) continue;
    std::string_view rest(name);
    rest.remove_prefix(prefix.size());
    long long idx = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), idx);
    if (ec != std::errc() || ptr != rest.data() + rest.size()) continue;
    if (!found.emplace(idx, c).second) throw ParseError("duplicate column " + name, 1);
  }
  std::vector<std::size_t> out;
  long long expect = 0;
  for (auto& [idx, col] : found) {
    if (idx != expect) throw ParseError("columns " + prefix + "* must be numbered 0..k-1", 1);
    out.push_back(col);
    ++expect;
  }
  return out;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

BanditDataset read_bandit_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ParseError("missing header", line_no);

  std::vector<std::string> header;
  for (auto f : split(line)) header.emplace_back(trim(f));
  const std::size_t header_line = line_no;

  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  const auto x_cols = indexed_columns(header, schema.context_prefix);
  const auto p_cols = indexed_columns(header, schema.propensity_prefix);
  const auto a_col = find_col(schema.action_column);
  const auto r_col = find_col(schema.reward_column);
  const auto lp_col = find_col(schema.logged_propensity_column);
  const auto c_col = find_col(schema.cluster_column);
  const auto e_col = find_col(schema.embedding_column);
  if (!a_col) throw ParseError("header lacks column '" + schema.action_column + "'", header_line);
  if (!r_col) throw ParseError("header lacks column '" + schema.reward_column + "'", header_line);
  if (p_cols.empty() && !lp_col)
    throw ParseError("header needs either " + schema.propensity_prefix + "* columns or '" +
                         schema.logged_propensity_column + "'",
                     header_line);

  const bool full_rows = !p_cols.empty();
  std::size_t num_actions = full_rows ? p_cols.size() : 0;
  if (full_rows && schema.num_actions && *schema.num_actions != num_actions)
    throw ValidationError("schema declares " + std::to_string(*schema.num_actions) + " actions but the file has " +
                          std::to_string(num_actions) + " propensity columns");
  if (!full_rows && schema.num_actions) num_actions = *schema.num_actions;

  std::vector<double> ctx;
  std::vector<double> props;
  BanditDataset d;
  d.reward_max = schema.reward_max;
  std::vector<int> clusters;
  std::vector<int> embeds;
  int max_action = -1;
  int max_cluster = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()),
                       line_no);
    for (auto c : x_cols) ctx.push_back(parse_real(fields[c], line_no, header[c]));
    const long long a = parse_int(fields[*a_col], line_no, header[*a_col]);
    if (a < 0 || (num_actions && static_cast<std::size_t>(a) >= num_actions))
      throw ValidationError("line " + std::to_string(line_no) + ": action " + std::to_string(a) + " out of range");
    const double r = parse_real(fields[*r_col], line_no, header[*r_col]);
    if (!(r >= 0.0 && r <= schema.reward_max))
      throw ValidationError("line " + std::to_string(line_no) + ": reward " + format_real(r) + " outside [0, " +
                            format_real(schema.reward_max) + "]");
    double logged = 0.0;
    if (full_rows) {
      for (auto c : p_cols) props.push_back(parse_real(fields[c], line_no, header[c]));
      logged = props[props.size() - num_actions + static_cast<std::size_t>(a)];
    } else {
      logged = parse_real(fields[*lp_col], line_no, header[*lp_col]);
    }
    if (!(logged > 0.0))
      throw ValidationError("line " + std::to_string(line_no) + ": logged action has propensity " + format_real(logged));
    if (c_col) {
      const long long c = parse_int(fields[*c_col], line_no, header[*c_col]);
      if (c < 0) throw ValidationError("line " + std::to_string(line_no) + ": negative cluster id");
      clusters.push_back(static_cast<int>(c));
      max_cluster = std::max(max_cluster, static_cast<int>(c));
    }
    if (e_col) {
      const long long e = parse_int(fields[*e_col], line_no, header[*e_col]);
      if (e < 0) throw ValidationError("line " + std::to_string(line_no) + ": negative embedding");
      embeds.push_back(static_cast<int>(e));
    }
    d.actions.push_back(static_cast<int>(a));
    d.rewards.push_back(r);
    d.logged_propensity.push_back(logged);
    max_action = std::max(max_action, static_cast<int>(a));
  }

  const std::size_t n = d.actions.size();
  if (!full_rows && num_actions == 0) num_actions = static_cast<std::size_t>(max_action + 1);
  d.num_actions = num_actions;
  d.contexts = Matrix(n, x_cols.size());
  std::copy(ctx.begin(), ctx.end(), d.contexts.data());
  if (full_rows) {
    Matrix p(n, num_actions);
    std::copy(props.begin(), props.end(), p.data());
    d.propensities = std::move(p);
  }
  if (c_col) {
    d.num_clusters = schema.num_clusters ? *schema.num_clusters : static_cast<std::size_t>(max_cluster + 1);
    d.cluster_ids = std::move(clusters);
  }
  if (e_col) {
    std::vector<int> map(num_actions, -1);
    int max_e = -1;
    for (std::size_t i = 0; i < n; ++i) {
      int& slot = map[static_cast<std::size_t>(d.actions[i])];
      if (slot >= 0 && slot != embeds[i])
        throw ValidationError("action " + std::to_string(d.actions[i]) + " logged with two different embeddings");
      slot = embeds[i];
      max_e = std::max(max_e, embeds[i]);
    }
    d.action_embeddings = std::move(map);
    d.num_embeddings = static_cast<std::size_t>(max_e + 1);
  }
  require_valid(d);
  return d;
}

BanditDataset load_bandit_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_bandit_csv(in, schema);
}

void write_bandit_csv(std::ostream& out, const BanditDataset& d, const CsvSchema& schema) {
  const std::size_t dim = d.context_dim();
  bool first = true;
  auto sep = [&] {
    if (!first) out << ',';
    first = false;
  };
  for (std::size_t t = 0; t < dim; ++t) {
    sep();
    out << schema.context_prefix << t;
  }
  sep();
  out << schema.action_column;
  sep();
  out << schema.reward_column;
  if (d.propensities) {
    for (std::size_t a = 0; a < d.num_actions; ++a) {
      sep();
      out << schema.propensity_prefix << a;
    }
  } else {
    sep();
    out << schema.logged_propensity_column;
  }
  if (d.cluster_ids) {
    sep();
    out << schema.cluster_column;
  }
  if (d.action_embeddings) {
    sep();
    out << schema.embedding_column;
  }
  out << '\n';

  std::string buf;
  for (std::size_t i = 0; i < d.size(); ++i) {
    buf.clear();
    for (std::size_t t = 0; t < dim; ++t) {
      buf += format_real(d.contexts(i, t));
      buf += ',';
    }
    buf += std::to_string(d.actions[i]);
    buf += ',';
    buf += format_real(d.rewards[i]);
    if (d.propensities) {
      for (double p : d.propensities->row(i)) {
        buf += ',';
        buf += format_real(p);
      }
    } else {
      buf += ',';
      buf += format_real(d.logged_propensity[i]);
    }
    if (d.cluster_ids) {
      buf += ',';
      buf += std::to_string((*d.cluster_ids)[i]);
    }
    if (d.action_embeddings) {
      buf += ',';
      buf += std::to_string((*d.action_embeddings)[static_cast<std::size_t>(d.actions[i])]);
    }
    buf += '\n';
    out << buf;
  }
}

void write_bandit_csv(const std::filesystem::path& path, const BanditDataset& d, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  write_bandit_csv(out, d, schema);
  if (!out) throw ParseError("write failed for " + path.string());
}

}  // namespace ope
