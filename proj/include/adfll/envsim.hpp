#pragma once

// Synthetic 3D landmark-localization environments.
//
// A volume's intensity is a radial profile around the landmark (one of four
// "sequence" maps), optionally perturbed by hashed noise ("pathology"), and
// viewed through one of three axis permutations ("orientation"). The 2x4x3
// combinations give the 24 task environments. An agent is a small box that
// moves one voxel per action and is rewarded by the decrease in its distance
// to the landmark.

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "adfll/random.hpp"

namespace adfll {

enum class Pathology : std::uint8_t { P0 = 0, P1 = 1 };
enum class Sequence : std::uint8_t { S0 = 0, S1 = 1, S2 = 2, S3 = 3 };
enum class Orientation : std::uint8_t { Axial = 0, Sagittal = 1, Coronal = 2 };

inline constexpr int kPathologyCount = 2;
inline constexpr int kSequenceCount = 4;
inline constexpr int kOrientationCount = 3;

struct Voxel {
    int x = 0;
    int y = 0;
    int z = 0;
    auto operator<=>(const Voxel&) const = default;
};

struct Dims {
    int x = 32;
    int y = 32;
    int z = 32;
    bool operator==(const Dims&) const = default;
    [[nodiscard]] bool contains(Voxel v) const {
        return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < x && v.y < y && v.z < z;
    }
    [[nodiscard]] std::size_t volume() const {
        return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) * static_cast<std::size_t>(z);
    }
};

struct EnvSpec {
    Dims dims;
    Pathology pathology = Pathology::P0;
    Sequence sequence = Sequence::S0;
    Orientation orientation = Orientation::Axial;
    // Landmark in un-oriented (axial) coordinates.
    Voxel landmark{16, 16, 16};
    std::uint64_t seed = 0;
    bool operator==(const EnvSpec&) const = default;
};

enum class Action : std::uint8_t { PosX = 0, NegX = 1, PosY = 2, NegY = 3, PosZ = 4, NegZ = 5 };
inline constexpr int kActionCount = 6;
inline constexpr std::array<Action, kActionCount> kAllActions{
    Action::PosX, Action::NegX, Action::PosY, Action::NegY, Action::PosZ, Action::NegZ};

struct AgentBox {
    Voxel center;
    int half_extent = 1;
};

// Quantized intensities (0..7) in x-major raster order.
using Observation = std::vector<std::uint8_t>;

struct Dynamics {
    int step_size = 1;
    double terminal_radius = 1.0;
};

struct StepResult {
    AgentBox box;
    double reward = 0.0;
    bool terminal = false;
};

std::string to_string(Pathology p);
std::string to_string(Sequence s);
std::string to_string(Orientation o);
std::string to_string(Action a);

// "P{p}-S{s}-{ORIENTATION}", e.g. "P1-S3-CORONAL".
std::string task_id(Pathology p, Sequence s, Orientation o);
std::string task_id(const EnvSpec& spec);

struct TaskKey {
    Pathology pathology;
    Sequence sequence;
    Orientation orientation;
};
// Throws ConfigError on malformed ids.
TaskKey parse_task_id(std::string_view id);

// Orientation axis permutation. Each one is an involution.
Voxel orient(Orientation o, Voxel v);

// Integer sequence profile at normalized distance t in [0, 1].
int sequence_profile(Sequence s, double t);

// Hashed noise in [-8, 8] for P1, 0 for P0.
int pathology_noise(Pathology p, std::uint64_t seed, Voxel oriented);

class TaskEnvironment {
public:
    TaskEnvironment(const EnvSpec& spec, Dynamics dynamics = {});

    [[nodiscard]] const EnvSpec& spec() const { return spec_; }
    [[nodiscard]] const std::string& task_id() const { return task_id_; }
    [[nodiscard]] const Dynamics& dynamics() const { return dynamics_; }
    [[nodiscard]] const Dims& dims() const { return spec_.dims; }

    // Landmark position in this volume's coordinates (orientation applied).
    [[nodiscard]] Voxel landmark() const { return landmark_; }
    [[nodiscard]] double max_distance() const { return max_distance_; }
    [[nodiscard]] double distance(Voxel v) const;

    // Out-of-bounds voxels read as 0.
    [[nodiscard]] std::uint8_t intensity(Voxel v) const;

private:
    EnvSpec spec_;
    Dynamics dynamics_;
    std::string task_id_;
    Voxel landmark_;
    double max_distance_ = 0.0;
    std::vector<std::uint8_t> grid_;
};

// Throws ConfigError when the landmark is outside the volume.
TaskEnvironment make_environment(const EnvSpec& spec, Dynamics dynamics = {});

// Closed-form intensity; the environment grid is materialized from this.
std::uint8_t intensity_formula(const EnvSpec& spec, Voxel v);

std::size_t patch_size(int half_extent);
Observation observe(const TaskEnvironment& env, const AgentBox& box);
StepResult step(const TaskEnvironment& env, const AgentBox& box, Action action);
double distance_error(Voxel pred, Voxel landmark);
AgentBox sample_start(const TaskEnvironment& env, Pcg32& rng, int half_extent = 1);

} // namespace adfll
