#include <Eigen/Core>

#include "jlm/errors.hpp"
#include "jlm/kinematics.hpp"
#include "jlm/nn/ops.hpp"
#include "jlm/rotmath.hpp"

namespace jlm {
namespace {

using RowMat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;
using MapMat3 = Eigen::Map<RowMat3>;
using CMapMat3 = Eigen::Map<const RowMat3>;
using MapVec3 = Eigen::Map<Vec3>;
using CMapVec3 = Eigen::Map<const Vec3>;

Rot6D read6(const double* p) {
  Rot6D r;
  for (int i = 0; i < 6; ++i) r.v[static_cast<std::size_t>(i)] = p[i];
  return r;
}

}  // namespace

namespace nn {

Tensor sixd_to_matrix(const Tensor& x) {
  if (x.rank() < 1 || x.shape().back() != 6) {
    throw ShapeMismatch("sixd_to_matrix expects (..., 6), got " + to_string(x.shape()));
  }
  const std::size_t n = x.numel() / 6;
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  shape.push_back(3);
  shape.push_back(3);
  std::vector<double> out(n * 9);
  const double* xd = x.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    MapMat3 dst(out.data() + 9 * i);
    dst = rotmath::sixd_to_matrix(read6(xd + 6 * i));
  }
  return make_result(std::move(shape), std::move(out), {x}, [n](Node& self) {
    Node& xn = *self.inputs[0];
    auto& g = xn.ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      const Mat3 gm = CMapMat3(self.grad.data() + 9 * i);
      const auto d = rotmath::sixd_to_matrix_vjp(read6(xn.value.data() + 6 * i), gm);
      for (std::size_t k = 0; k < 6; ++k) g[6 * i + k] += d[k];
    }
  });
}

}  // namespace nn

namespace kinematics {

using nn::Node;
using nn::Shape;
using nn::Tensor;

FkResult forward_kinematics(const Tensor& local_rotations, const Tensor& root_translation,
                            const SkeletonTemplate& tmpl) {
  tmpl.validate();
  const std::size_t nj = tmpl.joint_count();
  const Shape& s = local_rotations.shape();
  if (s.size() != 4 || s[1] != nj || s[2] != 3 || s[3] != 3) {
    throw ShapeMismatch("forward_kinematics expects (N, " + std::to_string(nj) + ", 3, 3), got " +
                        nn::to_string(s));
  }
  const std::size_t n = s[0];
  const bool has_root = root_translation.defined();
  if (has_root && root_translation.shape() != Shape{n, 3}) {
    throw ShapeMismatch("forward_kinematics root translation " + nn::to_string(root_translation.shape()));
  }

  // Packed output per joint: 9 rotation values then 3 position values.
  std::vector<double> packed(n * nj * 12);
  const double* ld = local_rotations.data().data();
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t j = 0; j < nj; ++j) {
      double* o = packed.data() + (f * nj + j) * 12;
      const CMapMat3 local(ld + (f * nj + j) * 9);
      if (j == 0) {
        MapMat3 orot(o);
        MapVec3 opos(o + 9);
        orot = local;
        opos = has_root ? Vec3(CMapVec3(root_translation.data().data() + 3 * f)) : Vec3::Zero();
      } else {
        const double* p = packed.data() + (f * nj + static_cast<std::size_t>(tmpl.parents[j])) * 12;
        const CMapMat3 parent_rot(p);
        MapMat3 orot(o);
        MapVec3 opos(o + 9);
        orot = parent_rot * local;
        opos = CMapVec3(p + 9) + parent_rot * tmpl.offsets[j];
      }
    }
  }

  std::vector<Tensor> inputs{local_rotations};
  if (has_root) inputs.push_back(root_translation);
  const auto parents = tmpl.parents;
  const auto offsets = tmpl.offsets;
  auto values = packed;
  Tensor fused = nn::make_result(
      {n, nj, 12}, std::move(packed), std::move(inputs),
      [n, nj, has_root, parents, offsets, values = std::move(values)](Node& self) {
        Node& ln = *self.inputs[0];
        std::vector<double> g(self.grad);  // running adjoints, children fold into parents
        std::vector<double>* gl = ln.requires_grad ? &ln.ensure_grad() : nullptr;
        for (std::size_t f = 0; f < n; ++f) {
          for (std::size_t j = nj; j-- > 0;) {
            double* gj = g.data() + (f * nj + j) * 12;
            const Mat3 g_rot = CMapMat3(gj);
            const Vec3 g_pos = CMapVec3(gj + 9);
            const CMapMat3 local(ln.value.data() + (f * nj + j) * 9);
            if (j == 0) {
              if (gl) {
                Eigen::Map<RowMat3> dst(gl->data() + f * nj * 9);
                dst += g_rot;
              }
              if (has_root) {
                Node& rn = *self.inputs[1];
                if (rn.requires_grad) {
                  auto& gr = rn.ensure_grad();
                  for (int k = 0; k < 3; ++k) gr[3 * f + static_cast<std::size_t>(k)] += g_pos[k];
                }
              }
              continue;
            }
            const std::size_t p = f * nj + static_cast<std::size_t>(parents[j]);
            const CMapMat3 parent_rot(values.data() + p * 12);
            double* gp = g.data() + p * 12;
            // rot_j = rot_p * local_j ; pos_j = pos_p + rot_p * offset_j
            MapMat3 gp_rot(gp);
            MapVec3 gp_pos(gp + 9);
            gp_rot += g_rot * local.transpose() + g_pos * offsets[j].transpose();
            gp_pos += g_pos;
            if (gl) {
              Eigen::Map<RowMat3> dst(gl->data() + (f * nj + j) * 9);
              dst += parent_rot.transpose() * g_rot;
            }
          }
        }
      });

  std::vector<std::size_t> rot_idx(9), pos_idx{9, 10, 11};
  for (std::size_t k = 0; k < 9; ++k) rot_idx[k] = k;
  FkResult r;
  r.global_rotations = nn::reshape(nn::index_select(fused, 2, rot_idx), {n, nj, 3, 3});
  r.positions = nn::index_select(fused, 2, pos_idx);
  return r;
}

Tensor to_head_relative(const Tensor& positions, int head_index) {
  const std::size_t r = positions.rank();
  if (r < 2 || positions.shape().back() != 3) {
    throw ShapeMismatch("to_head_relative expects (..., J, 3), got " + nn::to_string(positions.shape()));
  }
  const Tensor head = nn::index_select(positions, r - 2, {static_cast<std::size_t>(head_index)});
  // head is (..., 1, 3); repeat across joints by concatenation.
  std::vector<Tensor> reps(positions.dim(r - 2), head);
  return nn::sub(positions, nn::concat(reps, r - 2));
}

Tensor head_align(const Tensor& positions, const Tensor& observed_head, int head_index) {
  const std::size_t r = positions.rank();
  Shape expect(positions.shape().begin(), positions.shape().end() - 2);
  expect.push_back(3);
  if (r < 2 || positions.shape().back() != 3 || observed_head.shape() != expect) {
    throw ShapeMismatch("head_align: positions " + nn::to_string(positions.shape()) + " vs head " +
                        nn::to_string(observed_head.shape()));
  }
  Shape head_shape = expect;
  head_shape.insert(head_shape.end() - 1, 1);
  const Tensor obs = nn::reshape(observed_head, head_shape);
  const Tensor local_head = nn::index_select(positions, r - 2, {static_cast<std::size_t>(head_index)});
  const Tensor shift = nn::sub(obs, local_head);
  std::vector<Tensor> reps(positions.dim(r - 2), shift);
  return nn::add(positions, nn::concat(reps, r - 2));
}

}  // namespace kinematics
}  // namespace jlm
