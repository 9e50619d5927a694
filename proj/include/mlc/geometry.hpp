#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mlc::geometry {

/// Input of the logic-core solver, in units of the muscle rest length.
struct CoreSpec {
    double delta_in_frac = 0.5;  ///< muscle expansion over rest length
    double h_frac = 2.0;         ///< core height over rest length

    void validate() const;
    bool operator==(const CoreSpec&) const = default;
};

/// Solved logic core. Angles in radians, lengths in units of the muscle rest
/// length. The actuated state described by the angles has the `ac` muscle at
/// rest and `bc` expanded; `zeta` and `delta_out_frac` describe both expanded.
struct CoreGeometry {
    CoreSpec spec;
    double x_frac = 0;
    double phi = 0;
    double gamma1 = 0;
    double gamma2 = 0;
    double gamma3 = 0;
    double zeta = 0;
    double delta_out_frac = 0;

    /// Half the base length |ab|.
    double half_base() const;
};

/// Residuals of the core system plus the height definition, in the order
/// of the six published rows followed by h - x - cos(phi).
std::array<double, 7> core_residuals(const CoreGeometry& g);

CoreGeometry solve_core(const CoreSpec& spec, double tol = 1e-12);

struct SweepRow {
    double delta_in_frac;
    double h_frac;
    std::optional<double> delta_out_frac;  ///< empty when infeasible
};

std::vector<SweepRow> sweep_core(const std::vector<double>& delta_in_values,
                                 const std::vector<double>& h_values,
                                 double tol = 1e-12);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

/// Planar pose of the core for arbitrary link lengths |ac| and |bc|.
/// Coordinates have `a` at (-half_base, 0), `b` at (+half_base, 0) and the
/// perpendicular bisector of ab along +y.
struct CorePose {
    double cx, cy;  ///< point c
    double dy;      ///< height of d on the bisector
};

CorePose core_pose(const CoreGeometry& g, double len_ac, double len_bc);

enum class HingeType { Open, Crossed };

std::string to_string(HingeType h);
HingeType hinge_from_string(const std::string& s);

struct LeverSpec {
    double l_in = 1;
    double l_out = 1;
    double dl_in = 0.5;
    double dl_out = 0.5;
    double l = 1.5;
    HingeType hinge = HingeType::Open;

    void validate() const;
    LeverSpec scaled(double c) const;
    bool operator==(const LeverSpec&) const = default;
};

/// Which reading of the rest rows of the lever system to use.
///
/// `AsPublished` solves the system exactly as written (rest rows use the full
/// rest lengths, actuated rows the halved actuated lengths). `HalfSpan` halves
/// the rest rows too, so that the two rest rows and the two actuated rows
/// describe half-spreads of the same symmetric scissor; this is the reading the
/// assembly builders need for a lever that maps rest to actuated lengths.
enum class LeverConvention { AsPublished, HalfSpan };

struct LeverGeometry {
    LeverSpec spec;
    double theta1 = 0;
    double theta2 = 0;
    double l1 = 0;
    double l2 = 0;
    double dtheta = 0;
    LeverConvention convention = LeverConvention::AsPublished;
};

std::array<double, 5> lever_residuals(const LeverGeometry& g);

LeverGeometry solve_lever(const LeverSpec& spec, double tol = 1e-12,
                          LeverConvention convention = LeverConvention::AsPublished);

/// True when the lever's spread angles do not pass through pi/2 between the
/// rest and actuated states, i.e. both spreads change monotonically.
bool lever_is_monotone(const LeverGeometry& g);

void to_json(nlohmann::json& j, const CoreSpec& s);
void to_json(nlohmann::json& j, const CoreGeometry& g);
void to_json(nlohmann::json& j, const LeverSpec& s);
void to_json(nlohmann::json& j, const LeverGeometry& g);

}  // namespace mlc::geometry
