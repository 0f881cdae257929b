#include "adfll/envsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "adfll/errors.hpp"
#include "adfll/hash.hpp"

namespace adfll {

namespace {

double euclid(Voxel a, Voxel b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double farthest_corner_distance(Dims dims, Voxel from) {
    const double fx = std::max(from.x, dims.x - 1 - from.x);
    const double fy = std::max(from.y, dims.y - 1 - from.y);
    const double fz = std::max(from.z, dims.z - 1 - from.z);
    return std::sqrt(fx * fx + fy * fy + fz * fz);
}

std::size_t flat_index(Dims dims, Voxel v) {
    return (static_cast<std::size_t>(v.x) * static_cast<std::size_t>(dims.y) + static_cast<std::size_t>(v.y)) *
               static_cast<std::size_t>(dims.z) +
           static_cast<std::size_t>(v.z);
}

Voxel moved(Voxel v, Action a, int amount) {
    switch (a) {
    case Action::PosX: v.x += amount; break;
    case Action::NegX: v.x -= amount; break;
    case Action::PosY: v.y += amount; break;
    case Action::NegY: v.y -= amount; break;
    case Action::PosZ: v.z += amount; break;
    case Action::NegZ: v.z -= amount; break;
    }
    return v;
}

Voxel clamped(Voxel v, Dims d) {
    return {std::clamp(v.x, 0, d.x - 1), std::clamp(v.y, 0, d.y - 1), std::clamp(v.z, 0, d.z - 1)};
}

} // namespace

std::string to_string(Pathology p) { return "P" + std::to_string(static_cast<int>(p)); }
std::string to_string(Sequence s) { return "S" + std::to_string(static_cast<int>(s)); }

std::string to_string(Orientation o) {
    switch (o) {
    case Orientation::Axial: return "AXIAL";
    case Orientation::Sagittal: return "SAGITTAL";
    case Orientation::Coronal: return "CORONAL";
    }
    return "?";
}

std::string to_string(Action a) {
    static constexpr std::array<const char*, kActionCount> names{"POS_X", "NEG_X", "POS_Y",
                                                                 "NEG_Y", "POS_Z", "NEG_Z"};
    return names.at(static_cast<std::size_t>(a));
}

std::string task_id(Pathology p, Sequence s, Orientation o) {
    return to_string(p) + "-" + to_string(s) + "-" + to_string(o);
}

std::string task_id(const EnvSpec& spec) { return task_id(spec.pathology, spec.sequence, spec.orientation); }

TaskKey parse_task_id(std::string_view id) {
    for (int p = 0; p < kPathologyCount; ++p) {
        for (int s = 0; s < kSequenceCount; ++s) {
            for (int o = 0; o < kOrientationCount; ++o) {
                const TaskKey key{static_cast<Pathology>(p), static_cast<Sequence>(s), static_cast<Orientation>(o)};
                if (task_id(key.pathology, key.sequence, key.orientation) == id) return key;
            }
        }
    }
    throw ConfigError("unknown task id '" + std::string(id) + "'");
}

Voxel orient(Orientation o, Voxel v) {
    switch (o) {
    case Orientation::Axial: return v;
    case Orientation::Sagittal: return {v.z, v.y, v.x};
    case Orientation::Coronal: return {v.x, v.z, v.y};
    }
    return v;
}

int sequence_profile(Sequence s, double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int ramp = static_cast<int>(std::floor(255.0 * (1.0 - t)));
    switch (s) {
    case Sequence::S0: return ramp;
    case Sequence::S1: return 255 - ramp;
    case Sequence::S2: return static_cast<int>(std::floor(255.0 * (1.0 - t) * (1.0 - t)));
    case Sequence::S3: return static_cast<int>(std::floor(255.0 * std::fabs(std::sin(4.0 * std::numbers::pi * t))));
    }
    return 0;
}

int pathology_noise(Pathology p, std::uint64_t seed, Voxel oriented) {
    if (p == Pathology::P0) return 0;
    const std::uint64_t h = Fnv1a64{}
                                .update_le(seed, 8)
                                .update_le(static_cast<std::uint32_t>(oriented.x), 4)
                                .update_le(static_cast<std::uint32_t>(oriented.y), 4)
                                .update_le(static_cast<std::uint32_t>(oriented.z), 4)
                                .digest();
    return static_cast<int>(h % 17U) - 8;
}

std::uint8_t intensity_formula(const EnvSpec& spec, Voxel v) {
    const Voxel oriented = orient(spec.orientation, v);
    const double d = euclid(oriented, spec.landmark);
    const double d_max = farthest_corner_distance(spec.dims, orient(spec.orientation, spec.landmark));
    const double t = d_max > 0.0 ? d / d_max : 0.0;
    const int value = sequence_profile(spec.sequence, t) + pathology_noise(spec.pathology, spec.seed, oriented);
    return static_cast<std::uint8_t>(std::clamp(value, 0, 255));
}

TaskEnvironment::TaskEnvironment(const EnvSpec& spec, Dynamics dynamics)
    : spec_(spec), dynamics_(dynamics), task_id_(adfll::task_id(spec)) {
    if (spec.dims.x <= 0 || spec.dims.y <= 0 || spec.dims.z <= 0) {
        throw ConfigError("environment dims must be positive");
    }
    landmark_ = orient(spec.orientation, spec.landmark);
    if (!spec.dims.contains(spec.landmark) || !spec.dims.contains(landmark_)) {
        throw ConfigError("landmark outside volume for task " + task_id_);
    }
    if (dynamics.step_size <= 0 || !(dynamics.terminal_radius >= 0.0)) {
        throw ConfigError("invalid dynamics");
    }
    max_distance_ = farthest_corner_distance(spec.dims, landmark_);
    if (max_distance_ <= dynamics.terminal_radius) {
        throw ConfigError("volume too small for terminal radius in task " + task_id_);
    }
    grid_.resize(spec.dims.volume());
    for (int x = 0; x < spec.dims.x; ++x) {
        for (int y = 0; y < spec.dims.y; ++y) {
            for (int z = 0; z < spec.dims.z; ++z) {
                grid_[flat_index(spec.dims, {x, y, z})] = intensity_formula(spec, {x, y, z});
            }
        }
    }
}

double TaskEnvironment::distance(Voxel v) const { return euclid(v, landmark_); }

std::uint8_t TaskEnvironment::intensity(Voxel v) const {
    if (!spec_.dims.contains(v)) return 0;
    return grid_[flat_index(spec_.dims, v)];
}

TaskEnvironment make_environment(const EnvSpec& spec, Dynamics dynamics) { return TaskEnvironment(spec, dynamics); }

std::size_t patch_size(int half_extent) {
    const auto side = static_cast<std::size_t>(2 * half_extent + 1);
    return side * side * side;
}

Observation observe(const TaskEnvironment& env, const AgentBox& box) {
    Observation patch;
    patch.reserve(patch_size(box.half_extent));
    const int h = box.half_extent;
    for (int dx = -h; dx <= h; ++dx) {
        for (int dy = -h; dy <= h; ++dy) {
            for (int dz = -h; dz <= h; ++dz) {
                const Voxel v{box.center.x + dx, box.center.y + dy, box.center.z + dz};
                patch.push_back(static_cast<std::uint8_t>(env.intensity(v) / 32));
            }
        }
    }
    return patch;
}

StepResult step(const TaskEnvironment& env, const AgentBox& box, Action action) {
    StepResult out{box, 0.0, false};
    out.box.center = clamped(moved(box.center, action, env.dynamics().step_size), env.dims());
    const double before = env.distance(box.center);
    const double after = env.distance(out.box.center);
    out.reward = before - after;
    out.terminal = after <= env.dynamics().terminal_radius;
    return out;
}

double distance_error(Voxel pred, Voxel landmark) { return euclid(pred, landmark); }

AgentBox sample_start(const TaskEnvironment& env, Pcg32& rng, int half_extent) {
    const Dims d = env.dims();
    for (;;) {
        const Voxel v{static_cast<int>(rng.bounded(static_cast<std::uint32_t>(d.x))),
                      static_cast<int>(rng.bounded(static_cast<std::uint32_t>(d.y))),
                      static_cast<int>(rng.bounded(static_cast<std::uint32_t>(d.z)))};
        if (env.distance(v) > env.dynamics().terminal_radius) return AgentBox{v, half_extent};
    }
}

} // namespace adfll
