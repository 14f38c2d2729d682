// Writes a seeded census-like CSV in the Adult Income column layout.
//
// Income depends on education, age, hours, capital gain and marital status,
// plus a direct sex term, so the favorable rate differs between the sex
// groups in roughly the proportions of the real census extract.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairdiff/random.hpp"

namespace {

template <class T>
const T& pick(const std::vector<T>& items, const std::vector<double>& probs, fairdiff::Rng& rng) {
  std::discrete_distribution<std::size_t> d(probs.begin(), probs.end());
  return items[d(rng)];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"census-like fixture generator"};
  std::size_t rows = 3000;
  std::uint64_t seed = 2024;
  std::string out;
  app.add_option("-n,--rows", rows, "row count");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--out", out, "CSV path")->required();
  CLI11_PARSE(app, argc, argv);

  fairdiff::Rng rng(fairdiff::derive_seed(seed, 0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::vector<std::pair<std::string, int>> education{
      {"Preschool", 1}, {"1st-4th", 2}, {"5th-6th", 3},   {"7th-8th", 4},      {"9th", 5},          {"10th", 6},
      {"11th", 7},      {"12th", 8},    {"HS-grad", 9},   {"Some-college", 10}, {"Assoc-voc", 11},  {"Assoc-acdm", 12},
      {"Bachelors", 13}, {"Masters", 14}, {"Prof-school", 15}, {"Doctorate", 16}};
  const std::vector<double> education_p{0.002, 0.005, 0.01, 0.02, 0.016, 0.029, 0.036, 0.013,
                                        0.322, 0.224, 0.042, 0.033, 0.164, 0.054, 0.017, 0.013};
  const std::vector<std::string> workclass{"Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
                                           "Local-gov", "State-gov", "?"};
  const std::vector<double> workclass_p{0.70, 0.08, 0.035, 0.03, 0.065, 0.04, 0.05};
  const std::vector<std::string> occupation{"Tech-support", "Craft-repair", "Other-service", "Sales",
                                            "Exec-managerial", "Prof-specialty", "Handlers-cleaners",
                                            "Machine-op-inspct", "Adm-clerical", "Farming-fishing",
                                            "Transport-moving", "Protective-serv", "?"};
  const std::vector<double> occupation_male_p{0.03, 0.19, 0.07, 0.11, 0.13, 0.12, 0.06, 0.07, 0.06, 0.045, 0.07,
                                              0.03, 0.05};
  const std::vector<double> occupation_female_p{0.035, 0.02, 0.17, 0.12, 0.09, 0.14, 0.02, 0.05, 0.26, 0.01,
                                                0.01, 0.01, 0.06};
  const std::vector<std::string> race{"White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"};
  const std::vector<double> race_p{0.855, 0.096, 0.031, 0.01, 0.008};
  const std::vector<std::string> country{"United-States", "Mexico", "Philippines", "Germany", "Canada", "India",
                                         "?"};
  const std::vector<double> country_p{0.90, 0.02, 0.006, 0.004, 0.004, 0.003, 0.018};

  std::ofstream f(out, std::ios::binary);
  if (!f) {
    std::cerr << "cannot write " << out << '\n';
    return 1;
  }
  f << "age,workclass,fnlwgt,education,education-num,marital-status,occupation,relationship,race,sex,"
       "capital-gain,capital-loss,hours-per-week,native-country,income\n";

  for (std::size_t i = 0; i < rows; ++i) {
    const bool male = unif(rng) < 0.67;
    const int age = static_cast<int>(std::clamp(std::round(17.0 + 21.0 * std::abs(gauss(rng)) + 4.0 * unif(rng)), 17.0, 90.0));
    const auto& edu = pick(education, education_p, rng);

    std::string marital, relationship;
    const double married_p = age < 25 ? 0.12 : (male ? 0.62 : 0.42);
    const double u = unif(rng);
    if (u < married_p) {
      marital = "Married-civ-spouse";
      relationship = male ? "Husband" : "Wife";
    } else if (u < married_p + (age < 30 ? 0.28 : 0.12)) {
      marital = "Never-married";
      relationship = age < 25 ? "Own-child" : "Not-in-family";
    } else {
      static const std::vector<std::string> other{"Divorced", "Separated", "Widowed", "Married-spouse-absent"};
      marital = pick(other, {0.6, 0.15, 0.18, 0.07}, rng);
      relationship = unif(rng) < (male ? 0.25 : 0.5) ? "Unmarried" : "Not-in-family";
    }

    const auto& occ = pick(occupation, male ? occupation_male_p : occupation_female_p, rng);
    const double hours_raw = (male ? 42.0 : 36.0) + 10.0 * gauss(rng);
    const int hours = static_cast<int>(std::clamp(std::round(hours_raw), 1.0, 99.0));
    int gain = 0, loss = 0;
    if (unif(rng) < 0.08) gain = static_cast<int>(std::round(std::exp(7.5 + 1.2 * gauss(rng))));
    else if (unif(rng) < 0.045) loss = static_cast<int>(std::round(1400.0 + 400.0 * gauss(rng)));
    loss = std::max(loss, 0);
    const int fnlwgt = static_cast<int>(std::max(12285.0, std::round(190000.0 + 100000.0 * gauss(rng))));

    const double z = -4.7 + 0.33 * (edu.second - 9) + 0.04 * std::min(age - 17, 40) + 0.03 * (hours - 40) +
                     (marital == "Married-civ-spouse" ? 1.9 : 0.0) + (male ? 0.9 : 0.0) +
                     (gain > 5000 ? 2.5 : 0.0) + (occ == "Exec-managerial" || occ == "Prof-specialty" ? 0.8 : 0.0);
    const bool rich = unif(rng) < 1.0 / (1.0 + std::exp(-z));

    f << age << ',' << pick(workclass, workclass_p, rng) << ',' << fnlwgt << ',' << edu.first << ',' << edu.second
      << ',' << marital << ',' << occ << ',' << relationship << ',' << pick(race, race_p, rng) << ','
      << (male ? "Male" : "Female") << ',' << gain << ',' << loss << ',' << hours << ','
      << pick(country, country_p, rng) << ',' << (rich ? ">50K" : "<=50K") << '\n';
  }
  return 0;
}
