#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "listrank/dataset.hpp"
#include "listrank/errors.hpp"
#include "listrank/rng.hpp"

using namespace listrank;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("listrank_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_file(const fs::path& dir, const std::string& name,
                    const std::string& content) {
  const fs::path p = dir / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

// Independent sort-and-count oracle for the percentile labeling: with values
// sorted ascending and h = p/100*(n-1), the sensitive set is the first
// floor(h)+1 order statistics, extended over any ties with the last of them.
int oracle_sensitive_count(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double h = p / 100.0 * static_cast<double>(values.size() - 1);
  auto base = static_cast<std::size_t>(h);
  std::size_t count = base + 1;
  const double edge = values[base] +
                      (h - static_cast<double>(base)) *
                          ((base + 1 < values.size() ? values[base + 1] : values[base]) -
                           values[base]);
  while (count < values.size() && values[count] <= edge) ++count;
  return static_cast<int>(count);
}

}  // namespace

TEST_CASE("load_responses") {
  TempDir tmp;
  SUBCASE("basic counting") {
    const auto p = write_file(tmp.path, "r.csv",
                              "cell_id,drug_id,auc\n"
                              "c1,d1,0.5\n"
                              "c1,d2,0.25\n"
                              "c2,d1,0.75\n");
    const auto table = data::load_responses(p);
    CHECK(table.cells.size() == 2);
    CHECK(table.drugs.size() == 2);
    CHECK(table.observations.size() == 3);
    CHECK(table.cell_observations[0].size() == 2);
  }
  SUBCASE("empty body") {
    const auto p = write_file(tmp.path, "e.csv", "cell_id,drug_id,auc\n");
    const auto table = data::load_responses(p);
    CHECK(table.observations.empty());
    CHECK(table.cells.empty());
  }
  SUBCASE("duplicate pair names the line") {
    const auto p = write_file(tmp.path, "dup.csv",
                              "cell_id,drug_id,auc\n"
                              "c1,d1,0.5\n"
                              "c1,d1,0.6\n");
    try {
      data::load_responses(p);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }
  SUBCASE("non-numeric auc") {
    const auto p = write_file(tmp.path, "bad.csv",
                              "cell_id,drug_id,auc\nc1,d1,abc\n");
    CHECK_THROWS_AS(data::load_responses(p), ParseError);
  }
  SUBCASE("wrong field count") {
    const auto p = write_file(tmp.path, "fields.csv",
                              "cell_id,drug_id,auc\nc1,d1\n");
    CHECK_THROWS_AS(data::load_responses(p), ParseError);
  }
  SUBCASE("wrong header") {
    const auto p = write_file(tmp.path, "hdr.csv", "cell,drug,auc\n");
    CHECK_THROWS_AS(data::load_responses(p), ParseError);
  }
}

TEST_CASE("load_expression and load_fingerprints") {
  TempDir tmp;
  SUBCASE("two cells, three genes") {
    const auto p = write_file(tmp.path, "x.csv",
                              "cell_id,cancer_type,g_1,g_2,g_3\n"
                              "c1,lung,0.1,0.2,0.3\n"
                              "c2,skin,1,2,3\n");
    const auto cells = data::load_expression(p);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].cancer_type == "lung");
    CHECK(cells[1].expression == std::vector<double>{1, 2, 3});
  }
  SUBCASE("header-only file gives empty list") {
    const auto p = write_file(tmp.path, "x0.csv", "cell_id,cancer_type,g_1\n");
    CHECK(data::load_expression(p).empty());
    const auto q = write_file(tmp.path, "f0.csv", "drug_id,f_1\n");
    CHECK(data::load_fingerprints(q).empty());
  }
  SUBCASE("inconsistent column count") {
    const auto p = write_file(tmp.path, "xr.csv",
                              "cell_id,cancer_type,g_1,g_2\nc1,lung,0.5\n");
    CHECK_THROWS_AS(data::load_expression(p), ParseError);
  }
  SUBCASE("negative fingerprint count rejected") {
    const auto p = write_file(tmp.path, "f.csv", "drug_id,f_1,f_2\nd1,3,-1\n");
    CHECK_THROWS_AS(data::load_fingerprints(p), ParseError);
  }
  SUBCASE("fingerprint roundtrip") {
    const auto p = write_file(tmp.path, "f2.csv",
                              "drug_id,f_1,f_2,f_3\nd1,0,2,5\nd2,1,0,0\n");
    const auto drugs = data::load_fingerprints(p);
    REQUIRE(drugs.size() == 2);
    CHECK(drugs[0].fingerprint == std::vector<double>{0, 2, 5});
  }
}

TEST_CASE("percentile labeling") {
  auto make_table = [](const std::vector<double>& aucs) {
    data::ResponseTable t;
    t.cells = {"c"};
    for (std::size_t i = 0; i < aucs.size(); ++i) {
      t.drugs.push_back("d" + std::to_string(i));
      t.observations.push_back({0, i, aucs[i]});
    }
    t.rebuild_cell_index();
    return t;
  };

  SUBCASE("20 distinct AUCs at p=5: only the minimum is sensitive") {
    std::vector<double> aucs;
    for (int i = 0; i < 20; ++i) aucs.push_back(0.1 + 0.04 * i);
    const auto labeled = data::label_sensitivity(make_table(aucs), 5.0);
    int count = 0;
    std::size_t argmin = 0;
    for (std::size_t i = 0; i < labeled.labels.size(); ++i) {
      count += labeled.labels[i];
      if (labeled.table.observations[i].auc <
          labeled.table.observations[argmin].auc) {
        argmin = i;
      }
    }
    CHECK(count == 1);
    CHECK(labeled.labels[argmin] == 1);
  }
  SUBCASE("100 distinct AUCs at p=5: exactly five sensitive") {
    std::vector<double> aucs;
    for (int i = 0; i < 100; ++i) aucs.push_back(0.002 * i);
    const auto labeled = data::label_sensitivity(make_table(aucs), 5.0);
    int count = 0;
    for (int l : labeled.labels) count += l;
    CHECK(count == 5);
  }
  SUBCASE("all AUCs equal: everything ties at the threshold") {
    const auto labeled =
        data::label_sensitivity(make_table({0.3, 0.3, 0.3, 0.3}), 5.0);
    for (int l : labeled.labels) CHECK(l == 1);
  }
  SUBCASE("invalid percentile") {
    CHECK_THROWS_AS(data::label_sensitivity(make_table({0.1, 0.2}), 0.0),
                    DomainError);
    CHECK_THROWS_AS(data::label_sensitivity(make_table({0.1, 0.2}), 100.0),
                    DomainError);
  }
  SUBCASE("labeling is invariant under monotone transforms of a cell's AUCs") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(40);
      std::vector<double> aucs(n);
      for (double& a : aucs) a = rng.uniform(0.0, 1.0);
      const auto base = data::label_sensitivity(make_table(aucs), 5.0);
      std::vector<double> warped(n);
      for (std::size_t i = 0; i < n; ++i) warped[i] = std::exp(3.0 * aucs[i]);
      const auto transformed = data::label_sensitivity(make_table(warped), 5.0);
      CHECK(base.labels == transformed.labels);
    }
  }
  SUBCASE("matches the sort-and-count oracle on random cells") {
    Rng rng(99);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t n = 1 + rng.uniform_index(60);
      std::vector<double> aucs(n);
      for (double& a : aucs) {
        // mixed continuous and gridded values so ties occur
        a = rng.uniform() < 0.5 ? rng.uniform(0.0, 1.0)
                                : static_cast<double>(rng.uniform_index(5)) * 0.2;
      }
      const double p = rng.uniform(1.0, 60.0);
      const auto labeled = data::label_sensitivity(make_table(aucs), p);
      int count = 0;
      for (int l : labeled.labels) count += l;
      CHECK(count == oracle_sensitive_count(aucs, p));
      // every sensitive AUC must not exceed any insensitive AUC
      double max_pos = -1e300, min_neg = 1e300;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = labeled.table.observations[i].auc;
        if (labeled.labels[i]) {
          max_pos = std::max(max_pos, a);
        } else {
          min_neg = std::min(min_neg, a);
        }
      }
      CHECK(max_pos < min_neg);  // strict: ties are all labeled sensitive
      CHECK(count >= 1);
    }
  }
}

TEST_CASE("stratified LCO folds") {
  auto make_cells = [](const std::vector<std::pair<std::string, int>>& types) {
    std::vector<data::CellProfile> cells;
    int uid = 0;
    for (const auto& [type, count] : types) {
      for (int i = 0; i < count; ++i) {
        data::CellProfile c;
        c.id = "c" + std::to_string(uid++);
        c.cancer_type = type;
        c.expression = {0.0};
        cells.push_back(c);
      }
    }
    return cells;
  };

  SUBCASE("ten cells of one type split 2-2-2-2-2") {
    const auto cells = make_cells({{"a", 10}});
    const auto folds = data::make_lco_folds(cells, 5, 7);
    std::vector<int> sizes(5, 0);
    for (int f : folds.fold) ++sizes[f];
    CHECK(sizes == std::vector<int>{2, 2, 2, 2, 2});
  }
  SUBCASE("seven cells of one type split {2,2,1,1,1}") {
    const auto cells = make_cells({{"a", 7}});
    const auto folds = data::make_lco_folds(cells, 5, 7);
    std::vector<int> sizes(5, 0);
    for (int f : folds.fold) ++sizes[f];
    std::sort(sizes.rbegin(), sizes.rend());
    CHECK(sizes == std::vector<int>{2, 2, 1, 1, 1});
  }
  SUBCASE("two types x five cells: one of each per fold") {
    const auto cells = make_cells({{"a", 5}, {"b", 5}});
    const auto folds = data::make_lco_folds(cells, 5, 3);
    std::map<std::pair<int, std::string>, int> counts;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      ++counts[{folds.fold[i], cells[i].cancer_type}];
    }
    for (int f = 0; f < 5; ++f) {
      CHECK(counts[{f, "a"}] == 1);
      CHECK(counts[{f, "b"}] == 1);
    }
  }
  SUBCASE("same seed is identical, different seeds still balanced") {
    const auto cells = make_cells({{"a", 13}, {"b", 4}, {"c", 9}});
    const auto f1 = data::make_lco_folds(cells, 5, 42);
    const auto f2 = data::make_lco_folds(cells, 5, 42);
    CHECK(f1.fold == f2.fold);
    const auto f3 = data::make_lco_folds(cells, 5, 43);
    CHECK(f1.fold != f3.fold);
  }
  SUBCASE("per-type balance holds for 100 random type distributions") {
    Rng rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::pair<std::string, int>> spec;
      const int n_types = 1 + static_cast<int>(rng.uniform_index(6));
      for (int t = 0; t < n_types; ++t) {
        spec.emplace_back("t" + std::to_string(t),
                          1 + static_cast<int>(rng.uniform_index(23)));
      }
      const auto cells = make_cells(spec);
      const int n_folds = 2 + static_cast<int>(rng.uniform_index(5));
      const auto folds = data::make_lco_folds(cells, n_folds, trial);
      std::map<std::string, std::vector<int>> per_type;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        auto& v = per_type[cells[i].cancer_type];
        v.resize(n_folds, 0);
        CHECK(folds.fold[i] >= 0);
        CHECK(folds.fold[i] < n_folds);
        ++v[folds.fold[i]];
      }
      for (const auto& [type, sizes] : per_type) {
        const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
        CHECK(*hi - *lo <= 1);
      }
    }
  }
  SUBCASE("fold csv roundtrip") {
    TempDir tmp;
    const auto cells = make_cells({{"a", 6}, {"b", 3}});
    const auto folds = data::make_lco_folds(cells, 3, 5);
    const auto p = tmp.path / "folds.csv";
    data::save_folds(p, cells, folds);
    const auto loaded = data::load_folds(p, cells);
    CHECK(loaded.fold == folds.fold);
    CHECK(loaded.n_folds == 3);
  }
}

TEST_CASE("standardizer") {
  data::CellProfile a{"a", "t", {1.0, 10.0, 5.0}};
  data::CellProfile b{"b", "t", {3.0, 10.0, 7.0}};
  data::Standardizer st;
  st.fit({&a, &b});
  CHECK(st.mean == std::vector<double>{2.0, 10.0, 6.0});
  // constant gene keeps stdev 1 and maps to 0
  const auto za = st.apply(a.expression);
  CHECK(za[0] == doctest::Approx(-1.0));
  CHECK(za[1] == doctest::Approx(0.0));
  const auto zb = st.apply(b.expression);
  CHECK(zb[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(st.apply(std::vector<double>{1.0}), ShapeError);
}
