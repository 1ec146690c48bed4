#include <map>
#include <string>

#include "feedread/data.hpp"

namespace feedread::data {

namespace {

// ProPublica compas-scores-two-years.csv. The standard screening filters plus
// the two-group race restriction leave 5,278 rows. The network regresses the
// decile risk score; score > 4 (medium/high risk) is the positive prediction
// and two-year recidivism is the evaluation outcome.
constexpr const char* kCompas = R"(name = compas
target = decile_score
target_kind = regression
threshold = 4
label = two_year_recid == 1
protected = race
disadvantaged = race == African-American
numeric = age, juv_fel_count, juv_misd_count, juv_other_count, priors_count, days_b_screening_arrest
categorical = sex, age_cat, c_charge_degree
filter = race in African-American|Caucasian
filter = days_b_screening_arrest <= 30
filter = days_b_screening_arrest >= -30
filter = is_recid != -1
filter = c_charge_degree != O
filter = score_text != N/A
)";

// UCI Statlog German credit with a header row, attribute codes kept as-is
// (A11, A12, ...). credit_risk: 1 = good, 2 = bad.
constexpr const char* kGerman = R"(name = german
positive = credit_risk == 1
protected = age
disadvantaged = age < 25
numeric = duration, amount, installment_rate, present_residence, number_credits, people_liable
categorical = status, credit_history, purpose, savings, employment_duration, personal_status_sex, other_debtors, property, other_installment_plans, housing, job, telephone, foreign_worker
)";

// UCI Adult with a header row (underscored column names).
constexpr const char* kAdult = R"(name = adult
positive = income in >50K|>50K.
protected = sex
disadvantaged = sex == Female
numeric = age, education_num, capital_gain, capital_loss, hours_per_week
categorical = workclass, marital_status, occupation, race
missing = ?
)";

const std::map<std::string, const char*, std::less<>>& presets() {
  static const std::map<std::string, const char*, std::less<>> table{
      {"adult", kAdult}, {"compas", kCompas}, {"german", kGerman}};
  return table;
}

}  // namespace

std::string preset_text(std::string_view name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw InvalidArgument("unknown dataset preset '" + std::string(name) + "'");
  return it->second;
}

DatasetSpec preset(std::string_view name) { return parse_dataset_spec(preset_text(name)); }

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : presets()) names.push_back(k);
  return names;
}

}  // namespace feedread::data
