#include "mixorder/designs.hpp"

#include <map>

namespace mixorder {

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Mat mat2(double a11, double a12, double a22) {
  Mat m(2, 2);
  m << a11, a12, a12, a22;
  return m;
}

MixtureParams one_comp(const Vec& mu, const Mat& sigma) {
  MixtureParams p;
  p.alpha = Vec::Ones(1);
  p.mu = {mu};
  p.sigma = {sigma};
  return p;
}

MixtureParams two_comp(double a1, const Vec& mu1, const Vec& mu2,
                       const Mat& s1, const Mat& s2) {
  MixtureParams p;
  p.alpha = vec2(a1, 1.0 - a1);
  p.mu = {mu1, mu2};
  p.sigma = {s1, s2};
  return p;
}

MixtureParams three_comp(double a1, double a2, const Vec& mu1, const Vec& mu2,
                         const Vec& mu3, const Mat& s1, const Mat& s2,
                         const Mat& s3) {
  MixtureParams p;
  p.alpha = Vec(3);
  p.alpha << a1, a2, 1.0 - a1 - a2;
  p.mu = {mu1, mu2, mu3};
  p.sigma = {s1, s2, s3};
  return p;
}

std::map<std::string, SimDesign> build_designs() {
  std::map<std::string, SimDesign> out;
  const Mat eye = mat2(1, 0, 1);

  out["table1-model1"] = {"table1-model1", one_comp(vec2(0, 0), eye), 1};
  out["table1-model2"] = {"table1-model2",
                          one_comp(vec2(0, 0), mat2(1, 0.5, 1)), 1};

  out["table2-model1"] = {
      "table2-model1",
      two_comp(0.3, vec2(-0.5, -0.5), vec2(0.5, 0.5), eye, eye), 1};
  out["table2-model2"] = {
      "table2-model2", two_comp(0.3, vec2(-1, -1), vec2(1, 1), eye, eye), 1};
  out["table2-model3"] = {
      "table2-model3",
      two_comp(0.3, vec2(-0.5, -0.5), vec2(0.5, 0.5), mat2(2, 0, 2), eye), 1};

  out["table4-model1"] = {
      "table4-model1", two_comp(0.7, vec2(-1, -1), vec2(1, 1), eye, eye), 2};
  out["table4-model2"] = {
      "table4-model2", two_comp(0.7, vec2(-2, -2), vec2(2, 2), eye, eye), 2};

  out["table5-model1"] = {
      "table5-model1",
      three_comp(0.35, 0.35, vec2(-2, -2), vec2(0, 0), vec2(2, 2), eye, eye,
                 eye),
      2};
  out["table5-model2"] = {
      "table5-model2",
      three_comp(0.35, 0.35, vec2(-2, -2), vec2(0, 0), vec2(2, 2),
                 mat2(0.5, 0, 0.5), eye, mat2(2, 0, 2)),
      2};
  return out;
}

const std::map<std::string, SimDesign>& designs() {
  static const auto d = build_designs();
  return d;
}

std::string resolve_alias(const std::string& name) {
  if (name.rfind("table3-", 0) == 0) return "table2-" + name.substr(7);
  if (name.rfind("table6-", 0) == 0) return "table5-" + name.substr(7);
  return name;
}

}  // namespace

std::vector<std::string> design_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : designs()) names.push_back(k);
  return names;
}

SimDesign get_design(const std::string& name) {
  const auto& all = designs();
  auto it = all.find(resolve_alias(name));
  if (it == all.end()) {
    std::string known;
    for (const auto& [k, v] : all) known += " " + k;
    throw ArgumentError("unknown design '" + name + "'; available:" + known);
  }
  return it->second;
}

}  // namespace mixorder
