#include "mvreg/augmentation.hpp"

#include <algorithm>
#include <cmath>

namespace mvreg {

OverlapPartition partition_overlap(std::size_t n_data, std::size_t n_model, std::span<const Correspondence> trimmed) {
    OverlapPartition part;
    std::vector<bool> data_in(n_data, false);
    std::vector<bool> model_in(n_model, false);
    for (const auto& c : trimmed) {
        if (c.data_index >= n_data || c.model_index >= n_model) {
            throw InvalidArgument("partition_overlap: correspondence index out of range");
        }
        if (data_in[c.data_index]) throw InvalidArgument("partition_overlap: data point paired twice");
        data_in[c.data_index] = true;
        model_in[c.model_index] = true;
        part.pairing.emplace_back(c.data_index, c.model_index);
    }
    std::sort(part.pairing.begin(), part.pairing.end());
    for (std::size_t i = 0; i < n_data; ++i) (data_in[i] ? part.p_overlap : part.p_rest).push_back(i);
    for (std::size_t j = 0; j < n_model; ++j) (model_in[j] ? part.q_overlap : part.q_rest).push_back(j);
    return part;
}

PointCloud fuse_overlap(std::span<const std::pair<std::size_t, std::size_t>> pairing, const PointCloud& data,
                        const PointCloud& model) {
    PointCloud F(3, static_cast<Eigen::Index>(pairing.size()));
    for (std::size_t k = 0; k < pairing.size(); ++k) {
        const auto [p, q] = pairing[k];
        if (p >= static_cast<std::size_t>(data.cols()) || q >= static_cast<std::size_t>(model.cols())) {
            throw InvalidArgument("fuse_overlap: pairing index out of range");
        }
        F.col(static_cast<Eigen::Index>(k)) =
            0.5 * (data.col(static_cast<Eigen::Index>(p)) + model.col(static_cast<Eigen::Index>(q)));
    }
    return F;
}

namespace {

MultiScaleDescriptor rotated(MultiScaleDescriptor d, const Eigen::Matrix3d& R) {
    d.normal = (R * d.normal).normalized();
    return d;
}

void sort_descending(Eigen::Ref<Eigen::Vector3d> v) {
    std::sort(v.data(), v.data() + 3, std::greater<double>());
}

}  // namespace

namespace {

MultiScaleDescriptor merge_values(const MultiScaleDescriptor& data, const MultiScaleDescriptor& model) {
    if (data.values.size() != model.values.size() || data.sparse.size() != model.sparse.size()) {
        throw LengthMismatch("merge_descriptor: descriptors have different scale counts");
    }
    MultiScaleDescriptor out;
    out.normal = model.normal;
    out.values.resize(model.values.size());
    out.sparse.assign(model.sparse.size(), false);
    for (std::size_t l = 0; l < model.sparse.size(); ++l) {
        const auto base = static_cast<Eigen::Index>(3 * l);
        Eigen::Vector3d v;
        if (data.sparse[l] && !model.sparse[l]) {
            v = model.values.segment<3>(base);
        } else if (model.sparse[l] && !data.sparse[l]) {
            v = data.values.segment<3>(base);
        } else {
            v = 0.5 * (data.values.segment<3>(base) + model.values.segment<3>(base));
            out.sparse[l] = data.sparse[l];
        }
        sort_descending(v);
        out.values.segment<3>(base) = v;
    }
    return out;
}

}  // namespace

MultiScaleDescriptor merge_descriptor(const MultiScaleDescriptor& data, const MultiScaleDescriptor& model,
                                      const Eigen::Matrix3d& R) {
    MultiScaleDescriptor out = merge_values(data, model);
    Eigen::Vector3d np = R * data.normal;
    if (np.dot(model.normal) < 0.0) np = -np;
    const Eigen::Vector3d sum = 0.5 * (np + model.normal);
    if (!(sum.norm() > 1e-12)) throw DegenerateNormalSum("merge_descriptor: normals cancel");
    out.normal = sum.normalized();
    return out;
}

DescriptorList merge_descriptors(const DescriptorList& data, const DescriptorList& model, const Eigen::Matrix3d& R,
                                 std::span<const std::pair<std::size_t, std::size_t>> pairing) {
    DescriptorList out;
    out.reserve(pairing.size());
    for (const auto& [p, q] : pairing) {
        if (p >= data.size() || q >= model.size()) throw InvalidArgument("merge_descriptors: pairing index out of range");
        const auto& a = data[p];
        const auto& b = model[q];
        if (!a && !b) {
            out.emplace_back();
        } else if (!a) {
            out.push_back(b);
        } else if (!b) {
            out.push_back(rotated(*a, R));
        } else {
            try {
                out.push_back(merge_descriptor(*a, *b, R));
            } catch (const DegenerateNormalSum&) {
                out.push_back(merge_values(*a, *b));
            }
        }
    }
    return out;
}

namespace {

PointCloud gather(const PointCloud& cloud, const std::vector<std::size_t>& idx) {
    PointCloud out(3, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        out.col(static_cast<Eigen::Index>(k)) = cloud.col(static_cast<Eigen::Index>(idx[k]));
    }
    return out;
}

PointCloud concat(std::initializer_list<const PointCloud*> parts) {
    Eigen::Index n = 0;
    for (const auto* p : parts) n += p->cols();
    PointCloud out(3, n);
    Eigen::Index at = 0;
    for (const auto* p : parts) {
        out.middleCols(at, p->cols()) = *p;
        at += p->cols();
    }
    return out;
}

std::vector<Correspondence> keypoint_pairs(const PointCloud& moved, const DescribedCloud& model, double gate) {
    std::vector<Correspondence> out;
    for (Eigen::Index i = 0; i < moved.cols(); ++i) {
        const Neighbor nb = model.index->nearest(moved.col(i));
        if (nb.distance <= gate) out.push_back({static_cast<std::size_t>(i), nb.index, nb.distance});
    }
    return out;
}

}  // namespace

AugmentResult augment_model(const ModelState& model, const ScanData& scan, const RigidTransformd& T,
                            std::span<const Correspondence> trimmed, const AugmentOptions& options) {
    if (!(options.descriptor_gate_factor > 0.0)) throw InvalidArgument("augment_model: gate factor must be positive");
    const PointCloud moved = apply(T, scan.full);
    const PointCloud moved_keys = apply(T, scan.described.points);

    AugmentResult res;
    PointCloud full;
    PointCloud keys;
    DescriptorList desc;

    if (options.rude) {
        res.partition = partition_overlap(scan.full.cols(), model.size(), {});
        res.descriptor_partition = partition_overlap(scan.described.size(), model.described.size(), {});
        full = concat({&model.full, &moved});
        keys = concat({&model.described.points, &moved_keys});
        desc = model.described.descriptors;
        for (const auto& d : scan.described.descriptors) {
            desc.push_back(d ? std::optional<MultiScaleDescriptor>(rotated(*d, T.R)) : std::nullopt);
        }
    } else {
        res.partition = partition_overlap(scan.full.cols(), model.size(), trimmed);
        const PointCloud A = gather(model.full, res.partition.q_rest);
        const PointCloud F = fuse_overlap(res.partition.pairing, moved, model.full);
        const PointCloud B = gather(moved, res.partition.p_rest);
        full = concat({&A, &F, &B});

        const auto pairs = keypoint_pairs(moved_keys, model.described,
                                          options.descriptor_gate_factor * model.described.resolution);
        res.descriptor_partition = partition_overlap(scan.described.size(), model.described.size(), pairs);
        const auto& dp = res.descriptor_partition;
        const PointCloud Ad = gather(model.described.points, dp.q_rest);
        const PointCloud Fd = fuse_overlap(dp.pairing, moved_keys, model.described.points);
        const PointCloud Bd = gather(moved_keys, dp.p_rest);
        keys = concat({&Ad, &Fd, &Bd});

        for (std::size_t j : dp.q_rest) desc.push_back(model.described.descriptors[j]);
        for (auto& d : merge_descriptors(scan.described.descriptors, model.described.descriptors, T.R, dp.pairing)) {
            desc.push_back(std::move(d));
        }
        for (std::size_t i : dp.p_rest) {
            const auto& d = scan.described.descriptors[i];
            desc.push_back(d ? std::optional<MultiScaleDescriptor>(rotated(*d, T.R)) : std::nullopt);
        }
    }
    res.model = make_model(std::move(full), DescribedCloud::make(std::move(keys), std::move(desc)), model.scales);
    return res;
}

AugmentResult augment_model(const ModelState& model, const ScanData& scan, const RigidTransformd& T,
                            const TricpParams& params, const AugmentOptions& options) {
    if (options.rude) return augment_model(model, scan, T, std::span<const Correspondence>{}, options);
    const OverlapEstimate est = overlap_step(correspondence_step(scan.full, *model.full_index, T), params);
    return augment_model(model, scan, T, est.subset, options);
}

}  // namespace mvreg
