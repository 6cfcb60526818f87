#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spinshot/core.hpp"
#include "spinshot/rng.hpp"

using namespace spinshot;

TEST_SUITE_BEGIN("core");

TEST_CASE("overall efficiency of the measured factor chain") {
    CHECK(overall_efficiency(budget_zero_field()) == doctest::Approx(0.373699584).epsilon(1e-12));
    CHECK(std::abs(overall_efficiency(budget_zero_field()) - 0.374) < 0.005);
    CHECK(std::abs(overall_efficiency(budget_optimized()) - 0.757) < 0.005);
    CHECK(overall_efficiency(EfficiencyBudget{}) == 1.0);
}

TEST_CASE("overall efficiency rejects factors outside the unit interval") {
    EfficiencyBudget b;
    b.eta_detector = 1.2;
    CHECK_THROWS_AS(overall_efficiency(b), std::domain_error);
    b.eta_detector = -0.1;
    CHECK_THROWS_AS(overall_efficiency(b), std::domain_error);
}

TEST_CASE("overall efficiency scales linearly in each factor") {
    StreamRng rng(7, 0);
    for (int i = 0; i < 50; ++i) {
        EfficiencyBudget b{rng.next_double(), rng.next_double(), rng.next_double(),
                           rng.next_double(), rng.next_double()};
        const double base = overall_efficiency(b);
        const double c = rng.next_double();
        EfficiencyBudget scaled = b;
        scaled.eta_optics *= c;
        CHECK(overall_efficiency(scaled) == doctest::Approx(c * base).epsilon(1e-12));
        EfficiencyBudget larger = b;
        larger.eta_coupler = std::min(1.0, b.eta_coupler + 0.1);
        CHECK(overall_efficiency(larger) >= base);
    }
}

TEST_CASE("leakage rate calibration") {
    CHECK(leakage_rate_from_window(0.014, 3.0) ==
          doctest::Approx(-std::log(0.986) / 3.0).epsilon(1e-15));
    CHECK(std::abs(leakage_rate_from_window(0.014, 3.0) - 4.700e-3) < 1e-6);
    CHECK(leakage_rate_from_window(0.0, 5.0) == 0.0);
    CHECK(std::abs(leakage_rate_from_window(0.001, 2.0) - 5.0025e-4) < 5e-9);
    CHECK_THROWS_AS(leakage_rate_from_window(1.0, 3.0), std::domain_error);
    CHECK_THROWS_AS(leakage_rate_from_window(0.5, 0.0), std::domain_error);
    CHECK_THROWS_AS(leakage_rate_from_window(-0.1, 1.0), std::domain_error);
}

TEST_CASE("leakage rate and window probability are mutual inverses") {
    StreamRng rng(8, 0);
    for (int i = 0; i < 100; ++i) {
        const double p = 0.999 * rng.next_double();
        const double w = 0.1 + 10.0 * rng.next_double();
        const double rate = leakage_rate_from_window(p, w);
        CHECK(-std::expm1(-rate * w) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("presets carry the recorded operating points") {
    for (Preset p : all_presets()) {
        CHECK_NOTHROW(scenario_preset(p).validate());
    }
    CHECK(scenario_preset(Preset::zero_field).overall_efficiency == 0.37);
    CHECK(scenario_preset(Preset::faraday_2t).spin_flip_time == 158.0);
    CHECK(scenario_preset(Preset::faraday_2t).branching_ratio == 600.0);

    const ReadoutScenario vo = scenario_preset(Preset::voigt_optimized);
    CHECK(vo.branching_ratio == 12.0);
    CHECK(vo.branching_ratio / (vo.branching_ratio + 1.0) == doctest::Approx(0.923).epsilon(5e-4));

    // Leakage per pulse stays below the off-resonance bound at zero field.
    const ReadoutScenario zf = scenario_preset(Preset::zero_field);
    CHECK(-std::expm1(-zf.leakage_rate() * zf.pulse_duration) < 0.001);

    CHECK_THROWS_AS(preset_from_name("Nonsense"), std::invalid_argument);
}

TEST_CASE("voigt geometry pins the branching ratio to the purcell factor") {
    ReadoutScenario s = scenario_preset(Preset::faraday_2t);
    s.geometry = Geometry::voigt;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);  // R = 600 != F_P = 6.1
    s.branching_ratio = s.purcell_factor;
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("scenario invariants") {
    ReadoutScenario s = scenario_preset(Preset::faraday_2t);
    s.p_bright = 0.6;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = scenario_preset(Preset::faraday_2t);
    s.pulse_duration = s.pulse_repetition_time;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = scenario_preset(Preset::faraday_2t);
    s.overall_efficiency = 1.5;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("asymmetric flip times override the symmetric default") {
    ReadoutScenario s = scenario_preset(Preset::faraday_2t);
    CHECK(s.flip_time_to_dark() == 158.0);
    s.spin_flip_time_on = 120.0;
    s.spin_flip_time_off = 300.0;
    CHECK(s.flip_time_to_dark() == 120.0);
    CHECK(s.flip_time_to_bright() == 300.0);
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("effective bright flip rate folds in back-action") {
    const ReadoutScenario s = scenario_preset(Preset::faraday_2t);
    CHECK(s.bright_flip_rate(false) == doctest::Approx(1.0 / 158.0));
    const double expected = 1.0 / 158.0 + s.emission_rate() / 601.0;
    CHECK(s.bright_flip_rate(true) == doctest::Approx(expected).epsilon(1e-12));
    const ReadoutScenario zf = scenario_preset(Preset::zero_field);
    CHECK(zf.backaction_flip_rate() == 0.0);
}

TEST_CASE("config round-trips every preset") {
    for (Preset p : all_presets()) {
        ReadoutScenario original = scenario_preset(p);
        original.spin_flip_time_on = 140.0;
        original.spin_flip_time_off = 170.0;
        if (original.geometry == Geometry::voigt) {
            original.rise_time = 0.2;
        }
        std::stringstream io;
        save_scenario(original, io);
        const ReadoutScenario loaded = load_scenario(io);
        CHECK(loaded.overall_efficiency == original.overall_efficiency);
        CHECK(loaded.radiative_lifetime_ps == original.radiative_lifetime_ps);
        CHECK(loaded.purcell_factor == original.purcell_factor);
        CHECK(loaded.spin_flip_time == original.spin_flip_time);
        CHECK(loaded.spin_flip_time_on == original.spin_flip_time_on);
        CHECK(loaded.spin_flip_time_off == original.spin_flip_time_off);
        CHECK(loaded.branching_ratio == original.branching_ratio);
        CHECK(loaded.leakage_prob_3ns == original.leakage_prob_3ns);
        CHECK(loaded.pulse_duration == original.pulse_duration);
        CHECK(loaded.pulse_repetition_time == original.pulse_repetition_time);
        CHECK(loaded.n_repetitions == original.n_repetitions);
        CHECK(loaded.p_bright == original.p_bright);
        CHECK(loaded.geometry == original.geometry);
        CHECK(loaded.rise_time == original.rise_time);
    }
}

TEST_CASE("config parser reports line and column") {
    {
        std::stringstream in("overall_efficiency = 0.5\nbogus_key = 1\n");
        try {
            load_scenario(in);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line() == 2);
        }
    }
    {
        std::stringstream in("# comment\npulse_duration 5\n");
        CHECK_THROWS_AS(load_scenario(in), ConfigError);
    }
    {
        std::stringstream in("pulse_duration = abc\n");
        try {
            load_scenario(in);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line() == 1);
            CHECK(e.column() > 1);
        }
    }
    {
        std::stringstream in("geometry = sideways\n");
        CHECK_THROWS_AS(load_scenario(in), ConfigError);
    }
    CHECK_THROWS_AS(load_scenario_file("/nonexistent/path.cfg"), ConfigError);
}

TEST_CASE("resolve_scenario accepts presets and files") {
    CHECK(resolve_scenario("ZeroField").overall_efficiency == 0.37);
    CHECK_THROWS(resolve_scenario("/nonexistent/path.cfg"));
}

TEST_SUITE_END();
