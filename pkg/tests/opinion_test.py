import unittest

import numpy as np

from slcim.opinion import (Opinion, Evidence, TrustModel, OpinionError, DegenerateFusionError,
                           opinion_from_evidence, project, dissonance, trust_coefficient,
                           discount, fuse, vacuity_maximize, apply_uom_refresh,
                           LEGITIMATE_EVIDENCE, TIP_EVIDENCE)


def random_opinions(rng, count):
    masses = rng.dirichlet((1.0, 1.0, 1.0), size=count)
    rates = rng.uniform(0.0, 1.0, size=count)
    return [Opinion(m[0], m[1], m[2], a) for m, a in zip(masses.tolist(), rates.tolist())]


class Opinion_TestCase(unittest.TestCase):

    def assertOpinionAlmostEqual(self, first, second, places=9):
        for x, y in zip(first, second):
            self.assertAlmostEqual(x, y, places=places)

    def test_create_validates(self):
        Opinion.create(0.2, 0.3, 0.5, 0.6)
        with self.assertRaises(OpinionError):
            Opinion.create(0.5, 0.5, 0.5, 0.5)
        with self.assertRaises(OpinionError):
            Opinion.create(1.2, -0.2, 0.0, 0.5)
        with self.assertRaises(OpinionError):
            Opinion.create(0.2, 0.3, 0.5, 1.5)

    def test_evidence_mapping(self):
        self.assertOpinionAlmostEqual(opinion_from_evidence(LEGITIMATE_EVIDENCE, 0.5),
                                      (1 / 103, 1 / 103, 101 / 103, 0.5))
        self.assertOpinionAlmostEqual(opinion_from_evidence(TIP_EVIDENCE, 1.0),
                                      (100 / 103, 1 / 103, 2 / 103, 1.0))
        self.assertEqual(opinion_from_evidence((0, 0, 1), 0.5), Opinion(0.0, 0.0, 1.0, 0.5))

    def test_evidence_rejected(self):
        with self.assertRaises(OpinionError):
            opinion_from_evidence(Evidence(1, 1, 0), 0.5)
        with self.assertRaises(OpinionError):
            opinion_from_evidence(Evidence(-1, 1, 2), 0.5)

    def test_project(self):
        pb, pd = project(Opinion(0.2, 0.3, 0.5, 0.6))
        self.assertAlmostEqual(pb, 0.5)
        self.assertAlmostEqual(pd, 0.5)
        self.assertEqual(project(Opinion(1.0, 0.0, 0.0, 1.0)), (1.0, 0.0))
        pb, pd = project(Opinion(0.0, 0.0, 1.0, 0.25))
        self.assertAlmostEqual(pb, 0.25)
        self.assertAlmostEqual(pd, 0.75)

    def test_dissonance(self):
        self.assertAlmostEqual(dissonance(Opinion(0.4, 0.4, 0.2, 0.5)), 0.8)
        self.assertAlmostEqual(dissonance(Opinion(0.4, 0.0, 0.6, 0.5)), 0.0)
        self.assertEqual(dissonance(Opinion.vacuous()), 0.0)

    def test_trust_coefficients(self):
        half = Opinion(0.25, 0.25, 0.5, 0.5)
        self.assertAlmostEqual(trust_coefficient(TrustModel("uom"), half, half), 0.25)

        same = Opinion(0.7, 0.1, 0.2, 0.5)
        self.assertAlmostEqual(trust_coefficient(TrustModel("hom"), same, same), 1.0)
        self.assertEqual(trust_coefficient(TrustModel("hom"), Opinion(1.0, 0.0, 0.0, 0.5),
                                           Opinion(0.0, 1.0, 0.0, 0.5)), 0.0)
        self.assertEqual(trust_coefficient(TrustModel("hom"), Opinion.vacuous(), same), 0.0)
        self.assertEqual(trust_coefficient(TrustModel("nom"), same, half), 1.0)

    def test_trust_coefficient_symmetric(self):
        rng = np.random.default_rng(3)
        ops = random_opinions(rng, 2000)
        for variant in TrustModel.VARIANTS:
            model = TrustModel(variant)
            for op_i, op_j in zip(ops[::2], ops[1::2]):
                self.assertAlmostEqual(trust_coefficient(model, op_i, op_j),
                                       trust_coefficient(model, op_j, op_i), places=12)

    def test_discount(self):
        op = Opinion(0.6, 0.2, 0.2, 0.5)
        self.assertOpinionAlmostEqual(discount(op, 1.0), op)
        self.assertOpinionAlmostEqual(discount(op, 0.0), (0.0, 0.0, 1.0, 0.5))
        self.assertOpinionAlmostEqual(discount(op, 0.5), (0.3, 0.1, 0.6, 0.5))

    def test_fuse_with_vacuous(self):
        op = Opinion(0.3, 0.2, 0.5, 0.4)
        fused = fuse(op, Opinion.vacuous(0.9), 0.7)
        self.assertOpinionAlmostEqual(fused[:3], op[:3])

    def test_fuse_evidence_additivity(self):
        op_i = opinion_from_evidence((2, 1, 2), 0.5)
        op_j = opinion_from_evidence((1, 3, 2), 0.5)
        pooled = opinion_from_evidence((3, 4, 2), 0.5)
        self.assertOpinionAlmostEqual(fuse(op_i, op_j, 1.0)[:3], pooled[:3])

    def test_fuse_degenerate(self):
        dogmatic = Opinion(1.0, 0.0, 0.0, 0.5)
        with self.assertRaises(DegenerateFusionError):
            fuse(dogmatic, Opinion(0.0, 1.0, 0.0, 0.5), 1.0)

    def test_fuse_evidence_additivity_sweep(self):
        worst = 0.0
        for seed in range(5):
            rng = np.random.default_rng(seed)
            for r1, s1, r2, s2, W in rng.uniform(0.0, 50.0, size=(2000, 5)).tolist():
                W = 0.5 + W / 10.0
                fused = fuse(opinion_from_evidence((r1, s1, W), 0.5),
                             opinion_from_evidence((r2, s2, W), 0.5), 1.0)
                pooled = opinion_from_evidence((r1 + r2, s1 + s2, W), 0.5)
                worst = max(worst, max(abs(x - y) for x, y in zip(fused[:3], pooled[:3])))
        self.assertLessEqual(worst, 1e-9)

    def test_fuse_properties(self):
        pairs = 100000
        for n, variant in enumerate(TrustModel.VARIANTS):
            model = TrustModel(variant)
            rng = np.random.default_rng(7 + n)
            ops = random_opinions(rng, 2 * pairs)
            worst_sum = 0.0
            vacuity_increases = 0
            out_of_range = 0
            for op_i, op_j in zip(ops[::2], ops[1::2]):
                c = trust_coefficient(model, op_i, op_j)
                discounted = discount(op_j, c)
                fused = fuse(op_i, op_j, c)
                worst_sum = max(worst_sum, abs(discounted.b + discounted.d + discounted.u - 1.0),
                                abs(fused.b + fused.d + fused.u - 1.0))
                if fused.u > op_i.u + 1e-12:
                    vacuity_increases += 1
                if min(fused) < -1e-12 or max(fused) > 1.0 + 1e-12:
                    out_of_range += 1
            self.assertLessEqual(worst_sum, 1e-9, variant)
            self.assertEqual(vacuity_increases, 0, variant)
            self.assertEqual(out_of_range, 0, variant)

    def test_vacuity_maximize(self):
        maximized = vacuity_maximize(Opinion(0.4, 0.2, 0.4, 0.5))
        self.assertOpinionAlmostEqual(maximized, (0.2, 0.0, 0.8, 0.5))

        fixed = Opinion(0.2, 0.0, 0.8, 0.5)
        self.assertOpinionAlmostEqual(vacuity_maximize(fixed), fixed)
        self.assertOpinionAlmostEqual(vacuity_maximize(Opinion(0.5, 0.5, 0.0, 0.5)),
                                      (0.0, 0.0, 1.0, 0.5))

    def test_vacuity_maximize_boundary_rates(self):
        for a in (0.0, 1.0):
            op = Opinion(0.3, 0.3, 0.4, a)
            maximized = vacuity_maximize(op)
            maximized.validate()
            self.assertAlmostEqual(project(maximized)[0], project(op)[0])

    def test_vacuity_maximize_properties(self):
        for seed in range(11, 16):
            rng = np.random.default_rng(seed)
            for op in random_opinions(rng, 10000):
                maximized = vacuity_maximize(op)
                pb, pd = project(op)
                new_pb, new_pd = project(maximized)
                self.assertLessEqual(abs(new_pb - pb), 1e-9)
                self.assertLessEqual(abs(new_pd - pd), 1e-9)
                self.assertGreaterEqual(new_pd, -1e-12)
                self.assertGreaterEqual(min(maximized.b, maximized.d), 0.0)
                self.assertLessEqual(maximized.u, 1.0)
                self.assertLessEqual(min(maximized.b, maximized.d), 1e-9)
                self.assertGreaterEqual(maximized.u, op.u - 1e-12)

    def test_uom_refresh(self):
        model = TrustModel("uom")
        dissonant = Opinion(0.49, 0.505, 0.005, 0.5)
        refreshed = apply_uom_refresh(dissonant, model)
        self.assertGreater(refreshed.u, 0.9)
        self.assertAlmostEqual(project(refreshed)[0], project(dissonant)[0])

        confident = Opinion(0.99, 0.005, 0.005, 0.5)
        self.assertEqual(apply_uom_refresh(confident, model), confident)
        uncertain = Opinion(0.3, 0.3, 0.4, 0.5)
        self.assertEqual(apply_uom_refresh(uncertain, model), uncertain)

        with self.assertRaises(OpinionError):
            apply_uom_refresh(uncertain, TrustModel("hom"))

    def test_freeze_decision(self):
        model = TrustModel("uom")
        self.assertTrue(model.should_freeze(Opinion(0.995, 0.0, 0.005, 0.5)))
        self.assertFalse(model.should_freeze(Opinion(0.49, 0.505, 0.005, 0.5)))
        self.assertFalse(model.should_freeze(Opinion(0.3, 0.3, 0.4, 0.5)))
        self.assertTrue(TrustModel("nom").should_freeze(Opinion(0.49, 0.505, 0.005, 0.5)))

    def test_trust_model_parameters(self):
        with self.assertRaises(OpinionError):
            TrustModel("xyz")
        with self.assertRaises(OpinionError):
            TrustModel("uom", t_d=1.5)
        self.assertEqual(TrustModel("UOM"), TrustModel("uom"))
