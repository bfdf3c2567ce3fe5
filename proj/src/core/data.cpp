#include "ensrec/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "csv.hpp"
#include "ensrec/error.hpp"
#include "ensrec/rng.hpp"

namespace ensrec::data {

std::string delimiter_for(const std::string& format) {
  if (format == "csv") return ",";
  if (format == "tsv") return "\t";
  if (format.empty()) throw invalid_argument("empty interaction format");
  return format;
}

namespace {

std::size_t resolve_column(const std::string& ref, const std::vector<std::string>& header,
                           bool has_header, const std::string& role) {
  if (has_header) {
    auto it = std::find(header.begin(), header.end(), ref);
    if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  }
  if (auto index = csv::parse_int(ref); index && *index >= 0) {
    if (has_header && static_cast<std::size_t>(*index) >= header.size())
      throw invalid_argument(role + " column " + ref + " beyond the " +
                             std::to_string(header.size()) + " header columns");
    return static_cast<std::size_t>(*index);
  }
  throw invalid_argument(role + " column '" + ref + "' not found in header");
}

}  // namespace

InteractionDataset load_interactions(const std::string& path, const LoadOptions& options) {
  const std::string delimiter = delimiter_for(options.format);
  csv::LineReader reader(path);
  std::string line;
  std::vector<std::string> header;
  if (options.header) {
    if (!reader.next(line)) throw format_error(path + ": empty file");
    auto fields = csv::split_line(line, delimiter);
    if (!fields) reader.fail("malformed header");
    header = std::move(*fields);
  }
  const auto& cols = options.columns;
  const std::size_t user_col = resolve_column(cols.user, header, options.header, "user");
  const std::size_t item_col = resolve_column(cols.item, header, options.header, "item");
  std::optional<std::size_t> rating_col, time_col;
  if (cols.rating) rating_col = resolve_column(*cols.rating, header, options.header, "rating");
  if (cols.timestamp)
    time_col = resolve_column(*cols.timestamp, header, options.header, "timestamp");
  std::size_t needed = std::max(user_col, item_col);
  if (rating_col) needed = std::max(needed, *rating_col);
  if (time_col) needed = std::max(needed, *time_col);

  std::vector<InteractionRecord> records;
  std::size_t malformed = 0;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto fields = csv::split_line(line, delimiter);
    if (!fields || fields->size() <= needed) {
      ++malformed;
      continue;
    }
    InteractionRecord r;
    r.user = (*fields)[user_col];
    r.item = (*fields)[item_col];
    if (r.user.empty() || r.item.empty()) {
      ++malformed;
      continue;
    }
    if (rating_col) {
      auto v = csv::parse_double((*fields)[*rating_col]);
      if (!v || !std::isfinite(*v)) {
        ++malformed;
        continue;
      }
      r.rating = *v;
    }
    if (time_col) {
      const auto& raw = (*fields)[*time_col];
      if (auto t = csv::parse_int(raw)) {
        r.timestamp = *t;
      } else if (auto d = csv::parse_double(raw); d && std::isfinite(*d)) {
        r.timestamp = static_cast<std::int64_t>(*d);
      } else {
        ++malformed;
        continue;
      }
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw format_error(path + ": no valid interaction rows");
  return make_dataset(std::move(records), malformed);
}

void SplitSpec::validate() const {
  if (n_folds < 2) throw invalid_argument("n_folds must be >= 2");
  if (train < 0 || validation < 0 || test < 0) throw invalid_argument("negative split ratio");
  if (std::abs(train + validation + test - 1.0) > 1e-9)
    throw invalid_argument("split ratios must sum to 1");
  if (min_interactions < 1) throw invalid_argument("min_interactions must be >= 1");
}

FoldSet split_folds(const InteractionDataset& dataset, const SplitSpec& spec) {
  spec.validate();
  FoldSet out;
  out.users = dataset.users();
  out.items = dataset.items();
  if (out.users.empty()) throw invalid_argument("dataset has no interactions");

  std::vector<std::vector<ItemIndex>> by_user(out.users.size());
  for (const auto& r : dataset.records) {
    if (r.rating && !(*r.rating > 0.0)) continue;
    by_user[out.users.at(r.user)].push_back(out.items.at(r.item));
  }
  for (auto& row : by_user) std::sort(row.begin(), row.end());

  constexpr double kFloorGuard = 1e-9;
  for (int f = 0; f < spec.n_folds; ++f) {
    SplitMix64 rng(derive_fold_seed(spec.seed, f));
    FoldSplit fold;
    fold.fold_index = f;
    fold.train.resize(out.users.size());
    fold.validation.resize(out.users.size());
    fold.test.resize(out.users.size());
    for (std::size_t u = 0; u < by_user.size(); ++u) {
      auto items = by_user[u];
      const std::size_t n = items.size();
      if (n < static_cast<std::size_t>(spec.min_interactions)) {
        fold.train[u] = std::move(items);
        continue;
      }
      rng.shuffle(items);
      const auto n_val = static_cast<std::size_t>(std::floor(spec.validation * n + kFloorGuard));
      const auto n_test = static_cast<std::size_t>(std::floor(spec.test * n + kFloorGuard));
      const std::size_t n_train = n - n_val - n_test;
      auto begin = items.begin();
      fold.train[u].assign(begin, begin + n_train);
      fold.validation[u].assign(begin + n_train, begin + n_train + n_val);
      fold.test[u].assign(begin + n_train + n_val, items.end());
      for (auto* s : {&fold.train[u], &fold.validation[u], &fold.test[u]})
        std::sort(s->begin(), s->end());
    }
    out.folds.push_back(std::move(fold));
  }
  return out;
}

void write_splits(const FoldSet& folds, const std::string& path) {
  auto out = csv::open_output(path);
  out << "fold,user,item,subset\n";
  for (const auto& fold : folds.folds) {
    for (std::size_t u = 0; u < folds.users.size(); ++u) {
      std::vector<std::pair<ItemIndex, Subset>> rows;
      for (Subset s : {Subset::kTrain, Subset::kValidation, Subset::kTest})
        for (ItemIndex i : fold.subset(s)[u]) rows.emplace_back(i, s);
      std::sort(rows.begin(), rows.end());
      const std::string user = csv::quote(folds.users.name(static_cast<std::int32_t>(u)));
      for (const auto& [i, s] : rows)
        out << fold.fold_index << ',' << user << ',' << csv::quote(folds.items.name(i)) << ','
            << subset_name(s) << '\n';
    }
  }
  if (!out) throw io_error("failed writing '" + path + "'");
}

namespace {

std::vector<std::string> expect_header(csv::LineReader& reader, const std::string& expected) {
  std::string line;
  if (!reader.next(line)) reader.fail("missing header '" + expected + "'");
  if (line != expected) reader.fail("expected header '" + expected + "', got '" + line + "'");
  return {};
}

std::vector<std::string> read_fields(csv::LineReader& reader, const std::string& line,
                                     std::size_t count) {
  auto fields = csv::split_line(line, ",");
  if (!fields || fields->size() != count)
    reader.fail("expected " + std::to_string(count) + " fields");
  return std::move(*fields);
}

int parse_fold(csv::LineReader& reader, const std::string& raw) {
  auto fold = csv::parse_int(raw);
  if (!fold || *fold < 0 || *fold > 1'000'000) reader.fail("invalid fold '" + raw + "'");
  return static_cast<int>(*fold);
}

}  // namespace

FoldSet read_splits(const std::string& path) {
  csv::LineReader reader(path);
  expect_header(reader, "fold,user,item,subset");
  struct Row {
    int fold;
    std::string user, item;
    Subset subset;
  };
  std::vector<Row> rows;
  std::set<std::tuple<int, std::string, std::string>> seen;
  std::string line;
  int max_fold = -1;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto f = read_fields(reader, line, 4);
    const int fold = parse_fold(reader, f[0]);
    if (f[1].empty() || f[2].empty()) reader.fail("empty user or item id");
    auto subset = parse_subset(f[3]);
    if (!subset) reader.fail("unknown subset '" + f[3] + "'");
    if (!seen.emplace(fold, f[1], f[2]).second)
      reader.fail("pair (" + f[1] + ", " + f[2] + ") listed twice in fold " + f[0]);
    max_fold = std::max(max_fold, fold);
    rows.push_back({fold, std::move(f[1]), std::move(f[2]), *subset});
  }
  if (rows.empty()) throw format_error(path + ": no rows");

  std::vector<std::string> users, items;
  for (const auto& r : rows) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  FoldSet out{Vocabulary(std::move(users)), Vocabulary(std::move(items)), {}};
  out.folds.resize(max_fold + 1);
  for (int f = 0; f <= max_fold; ++f) {
    out.folds[f].fold_index = f;
    for (Subset s : {Subset::kTrain, Subset::kValidation, Subset::kTest})
      out.folds[f].subset(s).resize(out.users.size());
  }
  for (const auto& r : rows)
    out.folds[r.fold].subset(r.subset)[out.users.at(r.user)].push_back(out.items.at(r.item));
  for (auto& fold : out.folds)
    for (Subset s : {Subset::kTrain, Subset::kValidation, Subset::kTest})
      for (auto& row : fold.subset(s)) std::sort(row.begin(), row.end());
  out.validate();
  return out;
}

void write_matrix(const PredictionMatrix& matrix, const std::string& path) {
  auto out = csv::open_output(path);
  out << "fold,model,user,item,score\n";
  for (int f = 0; f < matrix.n_folds(); ++f) {
    for (std::size_t m = 0; m < matrix.models().size(); ++m) {
      const std::string model = csv::quote(matrix.models()[m]);
      for (std::size_t u = 0; u < matrix.users().size(); ++u) {
        const auto& list = matrix.list(f, m, static_cast<UserIndex>(u));
        if (list.empty()) continue;
        const std::string user = csv::quote(matrix.users().name(static_cast<std::int32_t>(u)));
        for (const auto& s : list)
          out << f << ',' << model << ',' << user << ',' << csv::quote(matrix.items().name(s.item))
              << ',' << csv::format_double(s.score) << '\n';
      }
    }
  }
  if (!out) throw io_error("failed writing '" + path + "'");
}

PredictionMatrix read_matrix(const std::string& path) {
  csv::LineReader reader(path);
  expect_header(reader, "fold,model,user,item,score");
  struct Row {
    std::string item;
    double score;
  };
  using GroupKey = std::tuple<int, std::string, std::string>;
  std::map<GroupKey, std::vector<Row>> groups;
  std::vector<std::string> models;
  std::optional<GroupKey> current;
  std::set<std::string> current_items;
  std::string line;
  int max_fold = -1;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto f = read_fields(reader, line, 5);
    const int fold = parse_fold(reader, f[0]);
    if (f[1].empty() || f[2].empty() || f[3].empty()) reader.fail("empty model, user or item id");
    auto score = csv::parse_double(f[4]);
    if (!score) reader.fail("unparsable score '" + f[4] + "'");
    if (!std::isfinite(*score)) reader.fail("non-finite score '" + f[4] + "'");
    if (std::find(models.begin(), models.end(), f[1]) == models.end()) models.push_back(f[1]);
    max_fold = std::max(max_fold, fold);

    GroupKey key{fold, f[1], f[2]};
    if (!current || *current != key) {
      if (groups.count(key))
        reader.fail("rows for fold " + f[0] + ", model '" + f[1] + "', user '" + f[2] +
                    "' are not contiguous");
      current = key;
      current_items.clear();
    }
    auto& group = groups[key];
    if (!current_items.insert(f[3]).second) reader.fail("duplicate item '" + f[3] + "'");
    if (!group.empty()) {
      const auto& prev = group.back();
      if (*score > prev.score || (*score == prev.score && f[3] < prev.item))
        reader.fail("scores out of order (descending score, then ascending item expected)");
    }
    group.push_back({std::move(f[3]), *score});
  }
  if (groups.empty()) throw format_error(path + ": no rows");

  std::vector<std::string> users, items;
  for (const auto& [key, rows] : groups) {
    users.push_back(std::get<2>(key));
    for (const auto& r : rows) items.push_back(r.item);
  }
  PredictionMatrix matrix(Vocabulary(std::move(users)), Vocabulary(std::move(items)), models,
                          max_fold + 1);
  for (auto& [key, rows] : groups) {
    RankedList list;
    list.reserve(rows.size());
    for (const auto& r : rows) list.push_back({matrix.items().at(r.item), r.score});
    matrix.set_list(std::get<0>(key), matrix.require_model(std::get<1>(key)),
                    matrix.users().at(std::get<2>(key)), std::move(list));
  }
  return matrix;
}

void write_weights(const ModelWeights& weights, const std::string& path) {
  auto out = csv::open_output(path);
  out << "fold,model,n,weight\n";
  for (const auto& [key, w] : weights.values)
    out << key.first << ',' << csv::quote(key.second) << ',' << weights.cutoff_n << ','
        << csv::format_double(w) << '\n';
  if (!out) throw io_error("failed writing '" + path + "'");
}

ModelWeights read_weights(const std::string& path) {
  csv::LineReader reader(path);
  expect_header(reader, "fold,model,n,weight");
  ModelWeights weights;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto f = read_fields(reader, line, 4);
    const int fold = parse_fold(reader, f[0]);
    auto n = csv::parse_int(f[2]);
    if (!n || *n < 1) reader.fail("invalid n '" + f[2] + "'");
    if (weights.cutoff_n != 0 && weights.cutoff_n != *n) reader.fail("mixed n values");
    weights.cutoff_n = static_cast<int>(*n);
    auto w = csv::parse_double(f[3]);
    if (!w || !(*w >= 0.0 && *w <= 1.0)) reader.fail("weight must be in [0, 1]");
    if (!weights.values.emplace(std::make_pair(fold, f[1]), *w).second)
      reader.fail("duplicate weight for fold " + f[0] + ", model '" + f[1] + "'");
  }
  if (weights.values.empty()) throw format_error(path + ": no rows");
  return weights;
}

std::pair<PredictionMatrix, FoldSet> align(const PredictionMatrix& matrix, const FoldSet& folds) {
  if (matrix.users() == folds.users && matrix.items() == folds.items) return {matrix, folds};
  const auto users = Vocabulary::unite(matrix.users(), folds.users);
  const auto items = Vocabulary::unite(matrix.items(), folds.items);
  return {matrix.reindexed(users, items), folds.reindexed(users, items)};
}

std::size_t count_short_lists(const PredictionMatrix& matrix, std::size_t depth) {
  std::size_t count = 0;
  for (int f = 0; f < matrix.n_folds(); ++f)
    for (std::size_t m = 0; m < matrix.models().size(); ++m)
      for (const auto& list : matrix.user_lists(f, m))
        if (!list.empty() && list.size() < depth) ++count;
  return count;
}

}  // namespace ensrec::data
