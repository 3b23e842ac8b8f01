#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "vw4c/dataset.hpp"
#include "vw4c/evaluation.hpp"
#include "vw4c/gradsuite.hpp"
#include "vw4c/losses.hpp"
#include "vw4c/model.hpp"
#include "vw4c/training.hpp"

namespace py = pybind11;
using namespace vw4c;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Grid4D grid_from_numpy(const Array& a) {
  if (a.ndim() != 4) throw ConfigError("expected a rank-4 array (batch, channel, h, w)");
  Grid4D g(int(a.shape(0)), int(a.shape(1)), int(a.shape(2)), int(a.shape(3)));
  std::memcpy(g.data(), a.data(), sizeof(double) * size_t(g.size()));
  return g;
}

Mask4D mask_from_numpy(const Array& a) {
  if (a.ndim() != 4) throw ConfigError("expected a rank-4 mask array");
  Mask4D m(int(a.shape(0)), int(a.shape(1)), int(a.shape(2)), int(a.shape(3)));
  const double* src = a.data();
  for (int64_t i = 0; i < m.size(); ++i) m.data()[i] = src[i] != 0.0 ? 1 : 0;
  return m;
}

py::array_t<double> grid_to_numpy(const Grid4D& g) {
  const Shape4& s = g.shape();
  py::array_t<double> out({s.b, s.c, s.h, s.w});
  std::memcpy(out.mutable_data(), g.data(), sizeof(double) * size_t(g.size()));
  return out;
}

ParamTensor param_from_numpy(const Array& a) {
  std::vector<int> shape;
  for (py::ssize_t d = 0; d < a.ndim(); ++d) shape.push_back(int(a.shape(d)));
  ParamTensor p(shape);
  std::memcpy(p.value.data(), a.data(), sizeof(double) * size_t(p.count()));
  return p;
}

loss::KlFormula formula_from_string(const std::string& name) {
  if (name == "paper") return loss::KlFormula::paper;
  if (name == "standard") return loss::KlFormula::standard;
  throw ConfigError("kl formula must be 'paper' or 'standard'");
}

model::ModelConfig config_from_kwargs(int in_channels, int out_channels, int levels,
                                      int base_width, int latent_dim, double dropout_rate,
                                      int groups, int input_size) {
  model::ModelConfig cfg;
  cfg.in_channels = in_channels;
  cfg.out_channels = out_channels;
  cfg.levels = levels;
  cfg.base_width = base_width;
  cfg.latent_dim = latent_dim;
  cfg.dropout_rate = dropout_rate;
  cfg.groups = groups;
  cfg.input_size = input_size;
  cfg.validate();
  return cfg;
}

// Thin inference-oriented wrapper around the core model.
class PyModel {
public:
  PyModel(model::ModelConfig cfg, uint64_t seed) : net_(cfg, seed) {}
  explicit PyModel(const train::Checkpoint& ckpt) : net_(ckpt.model_cfg, ckpt.params) {}

  py::tuple forward(const Array& x, const std::string& mode, uint64_t seed) {
    RngStream rng(seed);
    const model::LatentMode m =
        mode == "sample" ? model::LatentMode::sample : model::LatentMode::mean;
    LatentDistribution latent;
    Grid4D y = net_.forward(grid_from_numpy(x), m, rng, false, &latent);
    py::array_t<double> mu({latent.batch, latent.dim});
    py::array_t<double> sigma({latent.batch, latent.dim});
    std::memcpy(mu.mutable_data(), latent.mu.data(), sizeof(double) * latent.mu.size());
    std::memcpy(sigma.mutable_data(), latent.sigma.data(), sizeof(double) * latent.sigma.size());
    return py::make_tuple(grid_to_numpy(y), mu, sigma);
  }

  int64_t param_count() const { return model::param_count(net_.config()); }

  void save(const std::string& path) const {
    train::save_model_checkpoint(net_.config(), net_.params(), path);
  }

private:
  model::VUNet net_;
};

}  // namespace

PYBIND11_MODULE(vw4c, m) {
  m.doc() = "variational U-Net nowcasting core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  // primitives
  m.def(
      "elu",
      [](const Array& x, double alpha) { return grid_to_numpy(nn::elu(grid_from_numpy(x), alpha)); },
      py::arg("x"), py::arg("alpha") = 1.0);
  m.def(
      "conv2d",
      [](const Array& x, const Array& w, const Array& b, int stride, int padding) {
        const ParamTensor wp = param_from_numpy(w);
        const ParamTensor bp = param_from_numpy(b);
        return grid_to_numpy(nn::conv2d(grid_from_numpy(x), wp, bp, stride, padding));
      },
      py::arg("x"), py::arg("w"), py::arg("b"), py::arg("stride") = 1, py::arg("padding") = 0);
  m.def(
      "max_pool2d",
      [](const Array& x, int window) {
        return grid_to_numpy(nn::max_pool2d(grid_from_numpy(x), window));
      },
      py::arg("x"), py::arg("window") = 2);
  m.def(
      "group_norm",
      [](const Array& x, int groups, const Array& gamma, const Array& beta, double eps) {
        const ParamTensor g = param_from_numpy(gamma);
        const ParamTensor b = param_from_numpy(beta);
        return grid_to_numpy(nn::group_norm(grid_from_numpy(x), groups, g, b, eps));
      },
      py::arg("x"), py::arg("groups"), py::arg("gamma"), py::arg("beta"), py::arg("eps") = 1e-5);

  // losses
  m.def(
      "masked_l2",
      [](const Array& pred, const Array& target, const Array& mask) {
        loss::LossBreakdown bd;
        const double value = loss::masked_l2(grid_from_numpy(pred), grid_from_numpy(target),
                                             mask_from_numpy(mask), {}, &bd);
        py::dict breakdown;
        for (int v = 0; v < loss::kNumVariables; ++v) {
          breakdown[loss::variable_name(loss::TargetVariable(v))] =
              bd.l2_per_variable[size_t(v)];
        }
        return py::make_tuple(value, breakdown);
      },
      py::arg("pred"), py::arg("target"), py::arg("mask"));
  m.def(
      "kl_divergence",
      [](const Array& mu, const Array& sigma, const std::string& formula) {
        LatentDistribution latent;
        latent.batch = 1;
        latent.dim = int(mu.size());
        latent.mu.assign(mu.data(), mu.data() + mu.size());
        latent.sigma.assign(sigma.data(), sigma.data() + sigma.size());
        return loss::kl_divergence(latent, formula_from_string(formula));
      },
      py::arg("mu"), py::arg("sigma"), py::arg("formula") = "paper");
  m.def(
      "total_loss",
      [](double l2, double kl, double kl_weight) {
        loss::LossConfig cfg;
        cfg.kl_weight = kl_weight;
        return loss::total_loss(l2, kl, cfg);
      },
      py::arg("l2"), py::arg("kl"), py::arg("kl_weight") = 80.0);

  // schedule
  m.def(
      "cyclic_cosine_lr",
      [](int64_t step_in_cycle, int64_t steps_per_cycle, double lr_max, double lr_min) {
        train::ScheduleState st;
        st.step_in_cycle = step_in_cycle;
        st.steps_per_cycle = steps_per_cycle;
        st.lr_max = lr_max;
        st.lr_min = lr_min;
        return train::cyclic_cosine_lr(st);
      },
      py::arg("step_in_cycle"), py::arg("steps_per_cycle"), py::arg("lr_max") = 2e-4,
      py::arg("lr_min") = 0.0);

  // model
  py::class_<PyModel>(m, "Model")
      .def(py::init([](int in_channels, int out_channels, int levels, int base_width,
                       int latent_dim, double dropout_rate, int groups, int input_size,
                       uint64_t seed) {
             return PyModel(config_from_kwargs(in_channels, out_channels, levels, base_width,
                                               latent_dim, dropout_rate, groups, input_size),
                            seed);
           }),
           py::arg("in_channels") = 35, py::arg("out_channels") = 128, py::arg("levels") = 4,
           py::arg("base_width") = 32, py::arg("latent_dim") = 512,
           py::arg("dropout_rate") = 0.2, py::arg("groups") = 4, py::arg("input_size") = 32,
           py::arg("seed") = 0)
      .def("forward", &PyModel::forward, py::arg("x"), py::arg("mode") = "mean",
           py::arg("seed") = 0)
      .def("param_count", &PyModel::param_count)
      .def("save", &PyModel::save, py::arg("path"))
      .def_static("load", [](const std::string& path) {
        return PyModel(train::load_checkpoint(path));
      });

  // dataset
  m.def(
      "generate_dataset",
      [](const std::string& out_dir, int size, int days, int frames, double missing,
         uint64_t seed, const std::string& region_id) {
        data::SynthConfig cfg;
        cfg.region_id = region_id;
        cfg.size = size;
        cfg.days = days;
        cfg.frames_per_day = frames;
        cfg.missing_rate = missing;
        data::write_dataset(data::synth_generate(cfg, seed), out_dir);
      },
      py::arg("out_dir"), py::arg("size") = 32, py::arg("days") = 5, py::arg("frames") = 96,
      py::arg("missing") = 0.05, py::arg("seed") = 1, py::arg("region_id") = "R1");
  m.def(
      "window_count",
      [](const std::string& dir, int stride) {
        return data::window_split(data::read_dataset(dir), stride).size();
      },
      py::arg("dir"), py::arg("stride") = 1);

  // verification
  m.def("gradient_suite", [] {
    py::list out;
    for (const nn::SuiteCheck& c : nn::run_gradient_suite()) {
      py::dict d;
      d["name"] = c.name;
      d["max_rel_error"] = c.max_rel_error;
      d["tolerance"] = c.tolerance;
      d["pass"] = c.pass;
      out.append(d);
    }
    return out;
  });

  m.attr("__version__") = "0.1.0";
}
