#include "tslab/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tslab {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<Vector> vector_list_from_json(const Json& j) {
  std::vector<Vector> out;
  for (const auto& row : j) out.push_back(vector_from_json(row));
  return out;
}

Json vector_list_to_json(const std::vector<Vector>& vs) {
  Json j = Json::array();
  for (const auto& v : vs) j.push_back(vector_to_json(v));
  return j;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a matrix (array of rows)");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw std::invalid_argument("ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a vector (array)");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

Json link_to_json(const LinkFn& link) {
  return Json{{"tag", link.tag == LinkFn::Tag::identity ? "identity" : "leaky_relu"},
              {"zeta", link.zeta}};
}

LinkFn link_from_json(const Json& j) {
  const std::string tag = j.at("tag").get<std::string>();
  if (tag == "identity") return LinkFn::identity();
  if (tag == "leaky_relu") return LinkFn::leaky_relu(j.at("zeta").get<double>());
  throw std::invalid_argument("unknown link tag: " + tag);
}

Json process_to_json(const ProcessSpec& spec) {
  if (const auto* chain = std::get_if<FiniteChainSpec>(&spec)) {
    Json j{{"type", "finite_chain"},
           {"transition", matrix_to_json(chain->transition)},
           {"atoms", vector_list_to_json(chain->atoms)},
           {"target_fn", vector_list_to_json(chain->target_fn)},
           {"noise_std", chain->noise_std}};
    if (chain->init_stationary)
      j["init"] = "stationary";
    else
      j["init"] = vector_to_json(chain->init);
    return j;
  }
  if (const auto* lds = std::get_if<LdsSpec>(&spec)) {
    Json j{{"type", "lds"},
           {"A_star", matrix_to_json(lds->A_star)},
           {"H", matrix_to_json(lds->H)}};
    if (lds->trunc_radius) j["trunc_radius"] = *lds->trunc_radius;
    return j;
  }
  const auto& glm = std::get<GlmSpec>(spec);
  Json j{{"type", "glm"},
         {"A_star", matrix_to_json(glm.A_star)},
         {"H", matrix_to_json(glm.H)},
         {"link", link_to_json(glm.link)},
         {"P_star", matrix_to_json(Matrix(glm.P_star_diag.asDiagonal()))},
         {"rho", glm.rho}};
  if (glm.trunc_radius) j["trunc_radius"] = *glm.trunc_radius;
  return j;
}

ProcessSpec process_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "finite_chain") {
    const Matrix P = matrix_from_json(j.at("transition"));
    auto atoms = vector_list_from_json(j.at("atoms"));
    auto target = vector_list_from_json(j.at("target_fn"));
    const double noise_std = j.at("noise_std").get<double>();
    const auto& init = j.at("init");
    if (init.is_string() && init.get<std::string>() == "stationary")
      return FiniteChainSpec::make_stationary(P, std::move(atoms), std::move(target),
                                              noise_std);
    return FiniteChainSpec::make(P, std::move(atoms), vector_from_json(init),
                                 std::move(target), noise_std);
  }
  if (type == "lds") {
    std::optional<double> R;
    if (j.contains("trunc_radius")) R = j.at("trunc_radius").get<double>();
    return LdsSpec::make(matrix_from_json(j.at("A_star")), matrix_from_json(j.at("H")), R);
  }
  if (type == "glm") {
    std::optional<double> R;
    if (j.contains("trunc_radius")) R = j.at("trunc_radius").get<double>();
    Vector P_diag;
    const auto& pj = j.at("P_star");
    if (pj.is_array() && !pj.empty() && pj.at(0).is_array()) {
      const Matrix P = matrix_from_json(pj);
      for (Eigen::Index a = 0; a < P.rows(); ++a)
        for (Eigen::Index b = 0; b < P.cols(); ++b)
          if (a != b && P(a, b) != 0.0)
            throw std::invalid_argument("P_star must be diagonal");
      P_diag = P.diagonal();
    } else {
      P_diag = vector_from_json(pj);
    }
    return GlmSpec::make(matrix_from_json(j.at("A_star")), matrix_from_json(j.at("H")),
                         link_from_json(j.at("link")), std::move(P_diag),
                         j.at("rho").get<double>(), R);
  }
  throw std::invalid_argument("unknown process type: " + type);
}

Json family_to_json(const HypothesisSpec& family) {
  if (const auto* lin = std::get_if<LinearBall>(&family))
    return Json{{"family", "linear_ball"}, {"B", lin->B}, {"d_x", lin->dx}, {"d_y", lin->dy}};
  if (const auto* glm = std::get_if<GlmBall>(&family))
    return Json{{"family", "glm_ball"},
                {"B", glm->B},
                {"link", link_to_json(glm->link)},
                {"d_x", glm->dx}};
  if (const auto* tab = std::get_if<FiniteTable>(&family)) {
    Json fns = Json::array();
    for (const auto& f : tab->functions) fns.push_back(vector_list_to_json(f));
    return Json{{"family", "finite_table"},
                {"functions", std::move(fns)},
                {"atoms", vector_list_to_json(tab->atoms)}};
  }
  const auto& ell = std::get<Ellipsoid>(family);
  return Json{{"family", "ellipsoid"},
              {"beta", ell.beta},
              {"B_basis", ell.B_basis},
              {"q_growth", ell.q_growth},
              {"mu", ell.mu},
              {"basis", ell.basis.name}};
}

HypothesisSpec family_from_json(const Json& j) {
  const std::string kind = j.at("family").get<std::string>();
  if (kind == "linear_ball")
    return LinearBall{j.at("B").get<double>(), j.at("d_x").get<int>(),
                      j.at("d_y").get<int>()};
  if (kind == "glm_ball")
    return GlmBall{j.at("B").get<double>(), link_from_json(j.at("link")),
                   j.at("d_x").get<int>()};
  if (kind == "finite_table") {
    FiniteTable tab;
    for (const auto& f : j.at("functions")) tab.functions.push_back(vector_list_from_json(f));
    tab.atoms = vector_list_from_json(j.at("atoms"));
    return tab;
  }
  if (kind == "ellipsoid") {
    const std::string basis = j.value("basis", std::string("cosine"));
    if (basis != "cosine") throw std::invalid_argument("unknown basis: " + basis);
    return make_ellipsoid(j.at("beta").get<double>(), j.at("B_basis").get<double>(),
                          j.at("q_growth").get<double>(),
                          j.at("mu").get<std::vector<double>>(), cosine_basis());
  }
  throw std::invalid_argument("unknown family kind: " + kind);
}

Json member_to_json(const Member& member) {
  if (const auto* m = std::get_if<LinearMember>(&member))
    return Json{{"kind", "linear"}, {"A", matrix_to_json(m->A)}};
  if (const auto* m = std::get_if<GlmMember>(&member))
    return Json{{"kind", "glm"}, {"A", matrix_to_json(m->A)}};
  if (const auto* m = std::get_if<TableMember>(&member))
    return Json{{"kind", "table"}, {"index", m->index}};
  const auto& m = std::get<EllipsoidMember>(member);
  return Json{{"kind", "ellipsoid"}, {"theta", vector_to_json(m.theta)}};
}

void write_trajectory_csv(const TrajectoryBatch& batch, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  const Eigen::Index dx = batch.xs.front().size();
  const Eigen::Index dy = batch.ys.front().size();
  f << 't';
  for (Eigen::Index i = 0; i < dx; ++i) f << ",x_" << i;
  for (Eigen::Index i = 0; i < dy; ++i) f << ",y_" << i;
  f << '\n';
  for (std::size_t t = 0; t < batch.length(); ++t) {
    f << t;
    for (Eigen::Index i = 0; i < dx; ++i) f << ',' << fmt(batch.xs[t](i));
    for (Eigen::Index i = 0; i < dy; ++i) f << ',' << fmt(batch.ys[t](i));
    f << '\n';
  }
}

void write_cover_csv(const CoverCertificate& cert, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "element,params\n";
  for (std::size_t i = 0; i < cert.elements.size(); ++i) {
    f << i << ',';
    const Member& m = cert.elements[i];
    std::string sep;
    if (const auto* lin = std::get_if<LinearMember>(&m)) {
      for (Eigen::Index a = 0; a < lin->A.rows(); ++a)
        for (Eigen::Index b = 0; b < lin->A.cols(); ++b) {
          f << sep << fmt(lin->A(a, b));
          sep = ";";
        }
    } else if (const auto* ell = std::get_if<EllipsoidMember>(&m)) {
      for (Eigen::Index a = 0; a < ell->theta.size(); ++a) {
        f << sep << fmt(ell->theta(a));
        sep = ";";
      }
    }
    f << '\n';
  }
}

void write_dependency_csv(const Matrix& gamma, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      if (j) f << ',';
      f << fmt(gamma(i, j));
    }
    f << '\n';
  }
}

}  // namespace tslab
