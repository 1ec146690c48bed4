#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "feedread/csv.hpp"
#include "feedread/data.hpp"
#include "feedread/metrics.hpp"
#include "oracles.hpp"

using namespace feedread;
using data::Predicate;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

const char* kFakeCompas =
    "id,age,juv_fel_count,juv_misd_count,juv_other_count,priors_count,days_b_screening_arrest,sex,age_cat,"
    "c_charge_degree,race,decile_score,two_year_recid,is_recid,score_text\n"
    "1,25,0,0,0,2,-1,Male,25 - 45,F,African-American,7,1,1,High\n"
    "2,40,0,1,0,0,0,Female,25 - 45,M,Caucasian,2,0,0,Low\n"
    "3,19,1,0,0,5,3,Male,Less than 25,F,African-American,9,1,1,High\n"
    "4,55,0,0,0,1,-2,Female,Greater than 45,M,Caucasian,1,0,0,Low\n"
    "5,33,0,0,1,3,0,Male,25 - 45,F,Caucasian,5,1,1,Medium\n"
    "6,28,0,0,0,0,1,Female,25 - 45,M,African-American,3,0,0,Low\n"
    "7,30,0,0,0,0,45,Male,25 - 45,F,Caucasian,4,0,0,Low\n"              // screening gap too large
    "8,30,0,0,0,0,0,Male,25 - 45,F,Hispanic,4,0,0,Low\n"                // race outside the two groups
    "9,30,0,0,0,0,0,Male,25 - 45,O,Caucasian,4,0,0,Low\n"               // ordinary traffic offence
    "10,30,0,0,0,0,0,Male,25 - 45,F,Caucasian,4,0,-1,Low\n"             // no recidivism record
    "11,30,0,0,0,0,0,Male,25 - 45,F,Caucasian,4,0,0,N/A\n"              // no score
    "12,30,0,0,0,0,,Male,25 - 45,F,Caucasian,4,0,0,Low\n"               // missing value
    "13,47,2,0,0,8,-30,Male,Greater than 45,F,African-American,6,0,1,Medium\n"
    "14,22,0,0,0,1,30,Female,Less than 25,M,Caucasian,4,1,1,Low\n";

const char* kFakeGerman =
    "status,duration,credit_history,purpose,amount,savings,employment_duration,installment_rate,"
    "personal_status_sex,other_debtors,present_residence,property,age,other_installment_plans,housing,"
    "number_credits,job,people_liable,telephone,foreign_worker,credit_risk\n"
    "A11,6,A34,A43,1169,A65,A75,4,A93,A101,4,A121,67,A143,A152,2,A173,1,A192,A201,1\n"
    "A12,48,A32,A43,5951,A61,A73,2,A92,A101,2,A121,22,A143,A152,1,A173,1,A191,A201,2\n"
    "A14,12,A34,A46,2096,A61,A74,2,A93,A101,3,A121,49,A143,A152,1,A172,2,A191,A201,1\n"
    "A11,42,A32,A42,7882,A61,A74,2,A93,A103,4,A122,24,A143,A153,1,A173,2,A191,A201,1\n";

const char* kFakeAdult =
    "age,workclass,education_num,marital_status,occupation,race,sex,capital_gain,capital_loss,hours_per_week,"
    "income\n"
    "39,State-gov,13,Never-married,Adm-clerical,White,Male,2174,0,40,<=50K\n"
    "50,Self-emp,13,Married,Exec-managerial,White,Female,0,0,13,>50K\n"
    "38,Private,9,Divorced,?,White,Male,0,0,40,<=50K\n"
    "53,Private,7,Married,Handlers-cleaners,Black,Female,0,0,40,>50K.\n"
    "28,Private,13,Married,Prof-specialty,Black,Male,0,0,40,<=50K.\n";

data::DatasetSpec with_csv(data::DatasetSpec spec, const std::filesystem::path& path) {
  spec.csv_path = path;
  return spec;
}

}  // namespace

TEST_SUITE("csv") {
  TEST_CASE("quoted fields and line endings") {
    const auto t = csv::parse("a,b,c\r\n1,\"x, y\",\"say \"\"hi\"\"\"\n2,,\"multi\nline\"\n");
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "x, y");
    CHECK(t.rows[0][2] == "say \"hi\"");
    CHECK(t.rows[1][1].empty());
    CHECK(t.rows[1][2] == "multi\nline");
    CHECK(t.line_numbers == std::vector<std::size_t>{2, 3});
    CHECK(t.column("c") == 2);
    CHECK_THROWS_AS(t.column("missing"), ParseError);
  }

  TEST_CASE("ragged rows are rejected with their line") {
    try {
      csv::parse("a,b\n1,2\n3\n", "f.csv");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("f.csv:3") != std::string::npos);
    }
  }

  TEST_CASE("escape round-trips through parse") {
    const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", ""};
    const auto t = csv::parse("h1,h2,h3,h4\n" + csv::join_row(fields) + "\n");
    CHECK(t.rows[0] == fields);
    CHECK(csv::trim("  x y \t") == "x y");
  }
}

TEST_SUITE("data") {
  TEST_CASE("predicate parsing") {
    const auto p = Predicate::parse("race in African-American|Caucasian");
    CHECK(p.column == "race");
    CHECK(p.op == Predicate::Op::In);
    CHECK(p.values == std::vector<std::string>{"African-American", "Caucasian"});
    CHECK(Predicate::parse("x <= -30").op == Predicate::Op::Le);
    CHECK(Predicate::parse("x <= -30").values[0] == "-30");
    CHECK(Predicate::parse("x != O").op == Predicate::Op::Ne);
    CHECK(Predicate::parse("x > 4").op == Predicate::Op::Gt);
    CHECK(Predicate::parse("x == 1").to_string() == "x == 1");
    CHECK_THROWS_AS(Predicate::parse("no operator"), ParseError);
    CHECK_THROWS_AS(Predicate::parse("== 3"), ParseError);
  }

  TEST_CASE("dataset spec parsing") {
    const auto spec = data::parse_dataset_spec(
        "# comment\nname = toy\ncsv = toy.csv\npositive = y == yes\nprotected = g\ndisadvantaged = g == b\n"
        "numeric = n1, n2\ncategorical = c1\nfilter = n1 >= 0\n",
        "/base");
    CHECK(spec.name == "toy");
    CHECK(spec.csv_path == std::filesystem::path("/base/toy.csv"));
    CHECK(spec.target_column == "y");
    CHECK(spec.target_kind == data::TargetKind::Binary);
    REQUIRE(spec.features.size() == 3);
    CHECK(spec.features[2].kind == data::FeatureKind::Categorical);
    CHECK(spec.row_filter.size() == 1);
    CHECK_THROWS_AS(data::parse_dataset_spec("bogus = 1\n"), ParseError);
    CHECK_THROWS_AS(data::parse_dataset_spec("no equals sign\n"), ParseError);
    CHECK_THROWS_AS(data::parse_dataset_spec("name = x\ntarget_kind = ordinal\n"), ParseError);
  }

  TEST_CASE("leaking columns are rejected") {
    auto spec = data::preset("german");
    spec.features.push_back({"age", data::FeatureKind::Numeric});
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    spec.allow_protected_feature = true;
    CHECK_NOTHROW(spec.validate());
    spec.features.push_back({"credit_risk", data::FeatureKind::Numeric});
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  }

  TEST_CASE("presets exist") {
    CHECK(data::preset_names() == std::vector<std::string>{"adult", "compas", "german"});
    CHECK_THROWS_AS(data::preset("nope"), InvalidArgument);
    CHECK(data::preset("compas").target_kind == data::TargetKind::Regression);
    CHECK(data::preset("compas").regression_threshold == 4.0);
  }

  TEST_CASE("compas-shaped file: filters, missing values and labels") {
    const auto path = temp_file("feedread_compas.csv", kFakeCompas);
    const auto spec = with_csv(data::preset("compas"), path);
    const auto raw = data::load_table(spec);
    CHECK(raw.size() == 8);
    CHECK(raw.dropped_missing == 1);
    CHECK(raw.dropped_filter == 5);
    // kept ids 1-6, 13, 14
    CHECK(raw.kept == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 12, 13});
    CHECK(raw.target == std::vector<double>{7, 2, 9, 1, 5, 3, 6, 4});
    CHECK(raw.label == std::vector<int>{1, 0, 1, 0, 1, 0, 0, 1});
    CHECK(raw.a == std::vector<int>{1, 0, 1, 0, 0, 1, 1, 0});

    const auto ds = data::load_and_encode(spec);
    CHECK(ds.dim() == 6 + 2 + 3 + 2);
    CHECK(ds.target_binary() == std::vector<int>{1, 0, 1, 0, 1, 0, 1, 0});
    CHECK(data::decode_category(ds, 2, "age_cat") == "Less than 25");
    CHECK(data::decode_category(ds, 1, "sex") == "Female");
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      const auto& row = raw.table.rows[raw.kept[i]];
      CHECK(data::decode_category(ds, i, "c_charge_degree") == row[9]);
    }
    CHECK_THROWS_AS(data::decode_category(ds, 0, "age"), InvalidArgument);
    std::filesystem::remove(path);
  }

  TEST_CASE("german-shaped file") {
    const auto path = temp_file("feedread_german.csv", kFakeGerman);
    const auto raw = data::load_table(with_csv(data::preset("german"), path));
    CHECK(raw.target == std::vector<double>{1, 0, 1, 1});
    CHECK(raw.label == std::vector<int>{1, 0, 1, 1});
    CHECK(raw.a == std::vector<int>{0, 1, 0, 1});
    std::filesystem::remove(path);
  }

  TEST_CASE("adult-shaped file") {
    const auto path = temp_file("feedread_adult.csv", kFakeAdult);
    const auto raw = data::load_table(with_csv(data::preset("adult"), path));
    CHECK(raw.size() == 4);
    CHECK(raw.dropped_missing == 1);
    CHECK(raw.target == std::vector<double>{0, 1, 1, 0});
    CHECK(raw.a == std::vector<int>{0, 1, 1, 0});
    std::filesystem::remove(path);
  }

  TEST_CASE("missing files and columns raise") {
    auto spec = data::preset("german");
    spec.csv_path = "/nonexistent/german.csv";
    CHECK_THROWS_AS(data::load_table(spec), ParseError);
    const auto table = csv::parse("duration,credit_risk\n1,1\n");
    CHECK_THROWS_AS(data::load_table(data::preset("german"), table), ParseError);
  }

  TEST_CASE("numeric columns are standardized with training statistics") {
    const auto path = temp_file("feedread_compas2.csv", kFakeCompas);
    const auto ds = data::load_and_encode(with_csv(data::preset("compas"), path));
    std::filesystem::remove(path);
    for (std::size_t j = 0; j < 6; ++j) {
      const auto col = ds.x.col(static_cast<Eigen::Index>(j));
      const double mean = col.mean();
      const double var = (col.array() - mean).square().mean();
      CHECK(std::abs(mean) < 1e-12);
      CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto& age = ds.encoder.columns[0];
    CHECK(age.mean == doctest::Approx((25 + 40 + 19 + 55 + 33 + 28 + 47 + 22) / 8.0));
  }

  TEST_CASE("constant numeric columns get unit scale") {
    const auto table = csv::parse("y,g,k,v\n1,a,5,1\n0,b,5,2\n1,a,5,3\n");
    auto spec = data::parse_dataset_spec("name = t\npositive = y == 1\nprotected = g\ndisadvantaged = g == b\nnumeric = k, v\n");
    const auto raw = data::load_table(spec, table);
    const std::vector<std::size_t> all{0, 1, 2};
    const auto enc = data::fit_encoder(spec, raw, all);
    CHECK(enc.columns[0].constant);
    CHECK(enc.columns[0].scale == 1.0);
    const auto ds = data::encode(enc, raw, all);
    CHECK(ds.x.col(0).isZero());
  }

  TEST_CASE("bounds: data range for numeric, unit interval for one-hot") {
    const auto path = temp_file("feedread_compas3.csv", kFakeCompas);
    const auto ds = data::load_and_encode(with_csv(data::preset("compas"), path));
    std::filesystem::remove(path);
    REQUIRE(ds.bounds.size() == ds.dim());
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(ds.bounds[j].lo == ds.x.col(static_cast<Eigen::Index>(j)).minCoeff());
      CHECK(ds.bounds[j].hi == ds.x.col(static_cast<Eigen::Index>(j)).maxCoeff());
    }
    for (std::size_t j = 6; j < ds.dim(); ++j) {
      CHECK(ds.bounds[j].lo == 0.0);
      CHECK(ds.bounds[j].hi == 1.0);
    }
  }

  TEST_CASE("stratified split arithmetic") {
    std::vector<int> label, a;
    // strata sizes: (0,0) 50, (0,1) 30, (1,0) 15, (1,1) 5
    for (int i = 0; i < 100; ++i) {
      label.push_back(i >= 80);
      a.push_back((i >= 50 && i < 80) || i >= 95);
    }
    const auto s = data::stratified_split(label, a, 0.2, 7);
    CHECK(s.test.size() == 10 + 6 + 3 + 1);
    CHECK(s.train.size() + s.test.size() == 100);
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(100);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
    CHECK(data::stratified_split(label, a, 0.2, 7).test == s.test);
    CHECK(data::stratified_split(label, a, 0.2, 8).test != s.test);
    CHECK_THROWS_AS(data::stratified_split(label, a, 0.0, 7), InvalidArgument);
    CHECK_THROWS_AS(data::stratified_split(label, a, 1.0, 7), InvalidArgument);
    const std::vector<int> tiny_l{0, 0, 1}, tiny_a{0, 0, 0};
    CHECK_THROWS_AS(data::stratified_split(tiny_l, tiny_a, 0.5, 1), InvalidArgument);
  }

  TEST_CASE("prepare fits the encoder on training rows only") {
    const auto path = temp_file("feedread_compas4.csv", kFakeCompas);
    const auto spec = with_csv(data::preset("compas"), path);
    const auto prep = data::prepare(spec, 0.25, 3);
    std::filesystem::remove(path);
    CHECK(prep.train.rows() + prep.test.rows() == 8);
    const auto train_age = prep.train.x.col(0);
    CHECK(std::abs(train_age.mean()) < 1e-12);
    CHECK(prep.dropped_filter == 5);
  }

  TEST_CASE("subset keeps rows aligned") {
    const auto ds = data::synthetic_biased(200, 0.5, 2);
    const std::vector<std::size_t> rows{5, 0, 199};
    const auto sub = data::subset(ds, rows);
    CHECK(sub.rows() == 3);
    CHECK(sub.x.row(0) == ds.x.row(5));
    CHECK(sub.label[2] == ds.label[199]);
    CHECK(sub.a[1] == ds.a[0]);
    const std::vector<std::size_t> bad{200};
    CHECK_THROWS_AS(data::subset(ds, bad), InvalidArgument);
  }
}

TEST_SUITE("synthetic") {
  double label_gap(const data::EncodedDataset& ds) {
    metrics::PredictionSet p{ds.label, ds.label, ds.a, std::nullopt};
    return metrics::demographic_parity(p);
  }

  TEST_CASE("shape and determinism") {
    const auto a = data::synthetic_biased(500, 1.0, 11), b = data::synthetic_biased(500, 1.0, 11);
    CHECK(a.dim() == 5);
    CHECK(a.encoder.feature_names() == std::vector<std::string>{"core_1", "core_2", "proxy", "noise_1", "noise_2"});
    CHECK(a.x == b.x);
    CHECK(a.label == b.label);
    CHECK(a.x != data::synthetic_biased(500, 1.0, 12).x);
    CHECK_THROWS_AS(data::synthetic_biased(500, 1.5, 1), InvalidArgument);
    CHECK_THROWS_AS(data::synthetic_biased(10, 0.5, 1), InvalidArgument);
  }

  TEST_CASE("no bias gives independent labels") {
    const auto ds = data::synthetic_biased(5000, 0.0, 21);
    CHECK(label_gap(ds) < 0.05);
  }

  TEST_CASE("full bias is learned by a plain classifier") {
    const auto ds = data::synthetic_biased(5000, 1.0, 22);
    CHECK(label_gap(ds) == doctest::Approx(0.4).epsilon(0.15));
    metrics::PredictionSet p{oracle::logistic_predictions(ds.x, ds.label), ds.label, ds.a, std::nullopt};
    CHECK(metrics::demographic_parity(p) > 0.3);
  }

  TEST_CASE("proxy separates the groups") {
    const auto ds = data::synthetic_biased(2000, 0.0, 23);
    double m0 = 0, m1 = 0;
    int n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      (ds.a[i] ? m1 : m0) += ds.x(static_cast<Eigen::Index>(i), 2);
      (ds.a[i] ? n1 : n0)++;
    }
    CHECK(m1 / n1 - m0 / n0 == doctest::Approx(3.0).epsilon(0.1));
  }

  TEST_CASE("encoded csv and encoder json round-trip") {
    const auto ds = data::synthetic_biased(150, 1.0, 5);
    const auto path = std::filesystem::temp_directory_path() / "feedread_encoded.csv";
    data::write_encoded_csv(ds, path);
    const auto enc = data::EncoderState::from_json(ds.encoder.to_json());
    CHECK(enc.feature_names() == ds.encoder.feature_names());
    const auto back = data::read_encoded_csv(path, enc);
    std::filesystem::remove(path);
    CHECK(back.x == ds.x);
    CHECK(back.target == ds.target);
    CHECK(back.label == ds.label);
    CHECK(back.a == ds.a);
  }

  TEST_CASE("encoder json keeps categories and statistics") {
    const auto path = temp_file("feedread_compas5.csv", kFakeCompas);
    const auto ds = data::load_and_encode(with_csv(data::preset("compas"), path));
    std::filesystem::remove(path);
    const auto enc = data::EncoderState::from_json(ds.encoder.to_json());
    REQUIRE(enc.columns.size() == ds.encoder.columns.size());
    for (std::size_t i = 0; i < enc.columns.size(); ++i) {
      CHECK(enc.columns[i].categories == ds.encoder.columns[i].categories);
      CHECK(enc.columns[i].mean == ds.encoder.columns[i].mean);
      CHECK(enc.columns[i].scale == ds.encoder.columns[i].scale);
      CHECK(enc.columns[i].offset == ds.encoder.columns[i].offset);
    }
    CHECK(enc.target_kind == data::TargetKind::Regression);
    CHECK(enc.regression_threshold == 4.0);
  }
}
