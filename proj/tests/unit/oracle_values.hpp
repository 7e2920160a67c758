#pragma once
// Generated by tests/oracles/oracles.py; do not edit by hand.
#include <array>
#include <vector>

#include "nsshape/geometry.hpp"

namespace oracle {
using nsshape::geom::Vec2;
namespace geom = nsshape::geom;

inline constexpr double kPoissonCenter = 0.07367135126667017;
inline constexpr double kEllipse23Perimeter = 15.865439589290586;
inline constexpr std::array<std::array<double, 2>, 3> kForcingPoints{{{0.3, 0.7}, {0.55, 0.2}, {0.9, 0.45}}};
inline constexpr std::array<std::array<double, 2>, 3> kStokesForcing{{{-28.881602901294368, -31.869435066035923}, {51.97135682659458, 2.618766590493975}, {-3.9217208677801967, 36.62256917047971}}};
inline constexpr std::array<std::array<double, 2>, 3> kNavierStokesForcing{{{-26.321739611896973, -34.42929835543332}, {51.316962602930026, 4.632784919488949}, {-4.2657562707517, 36.80343928549227}}};
inline const std::vector<geom::Vec2> kPolyA{{0.5836426141493205, 0.16173523019626734}, {-0.17027749293100958, 0.8940732460854457}, {-0.7145111518859719, -0.07178835527576521}, {0.19748099762056914, 0.08136215129873126}, {0.5818684639192098, 0.4639000379222873}, {-0.27790252927254677, -0.7037196915217516}, {0.4962364553193235, 0.9472846861240825}, {0.9072588349927171, 0.5843039336764313}, {-0.9048475988659166, -0.6211659425065286}, {0.19565033479491056, -0.9839380515526979}, {0.41635402717079817, -0.29010168069795306}};
inline const std::vector<geom::Vec2> kPolyB{{-0.91842049185258, -0.6938443664860074}, {-0.5191360362606898, -0.9545671758190517}, {0.0022028157023818995, 0.2528497225839943}, {-0.8109379575031608, -0.6932191326069754}, {0.8489029742210106, 0.34718337590378834}, {-0.6605048683770816, -0.5020089370682745}, {-0.9935392078073788, 0.6965887082316964}, {-0.18576599519433334, -0.5278261463457807}, {0.3438999448073379, 0.7923735707031452}, {0.9287987715303665, -0.4051638356156735}, {-0.5015332145746101, 0.07174697668407126}};
inline constexpr double kHausdorffAB = 0.6202917017485244;

}  // namespace oracle
