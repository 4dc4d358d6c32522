//! Gauss–Kronrod node and weight tables, listed from the center outward.
//! Gauss weights belong to the even-indexed Kronrod nodes.

pub(super) struct KronrodTable {
    pub nodes: &'static [f64],
    pub kronrod: &'static [f64],
    pub gauss: &'static [f64],
}

pub(super) const GK15: KronrodTable = KronrodTable {
    nodes: &[
        0.0,
        0.207_784_955_007_898_467_600_689_4,
        0.405_845_151_377_397_166_906_606_4,
        0.586_087_235_467_691_130_294_144_8,
        0.741_531_185_599_394_439_863_864_8,
        0.864_864_423_359_769_072_789_712_8,
        0.949_107_912_342_758_524_526_189_7,
        0.991_455_371_120_812_639_206_854_7,
    ],
    kronrod: &[
        0.209_482_141_084_727_828_012_999_2,
        0.204_432_940_075_298_892_414_162,
        0.190_350_578_064_785_409_913_256_4,
        0.169_004_726_639_267_902_826_583_4,
        0.140_653_259_715_525_918_745_189_6,
        0.104_790_010_322_250_183_839_876_3,
        0.063_092_092_629_978_553_290_700_66,
        0.022_935_322_010_529_224_963_732_01,
    ],
    gauss: &[
        0.417_959_183_673_469_387_755_102,
        0.381_830_050_505_118_944_950_369_8,
        0.279_705_391_489_276_667_901_467_8,
        0.129_484_966_168_869_693_270_611_4,
    ],
};

pub(super) const GK31: KronrodTable = KronrodTable {
    nodes: &[
        0.0,
        0.101_142_066_918_717_499_027_074_2,
        0.201_194_093_997_434_522_300_628_3,
        0.299_180_007_153_168_812_166_78,
        0.394_151_347_077_563_369_897_207_4,
        0.485_081_863_640_239_680_693_655_7,
        0.570_972_172_608_538_847_537_226_7,
        0.650_996_741_297_416_970_533_735_9,
        0.724_417_731_360_170_047_416_186_1,
        0.790_418_501_442_465_932_967_649_3,
        0.848_206_583_410_427_216_200_648_3,
        0.897_264_532_344_081_900_882_509_7,
        0.937_273_392_400_705_904_307_758_9,
        0.967_739_075_679_139_134_257_348,
        0.987_992_518_020_485_428_489_565_7,
        0.998_002_298_693_397_060_285_172_8,
    ],
    kronrod: &[
        0.101_330_007_014_791_549_017_374_8,
        0.100_769_845_523_875_595_044_946_7,
        0.099_173_598_721_791_959_332_393_17,
        0.096_642_726_983_623_678_505_179_91,
        0.093_126_598_170_825_321_225_486_87,
        0.088_564_443_056_211_770_647_275_44,
        0.083_080_502_823_133_021_038_289_25,
        0.076_849_680_757_720_378_894_432_78,
        0.069_854_121_318_728_258_709_520_08,
        0.062_009_567_800_670_640_285_139_23,
        0.053_481_524_690_928_087_265_343_15,
        0.044_589_751_324_764_876_608_227_3,
        0.035_346_360_791_375_846_222_037_95,
        0.025_460_847_326_715_320_186_874,
        0.015_007_947_329_316_122_538_374_76,
        0.005_377_479_872_923_348_987_792_051,
    ],
    gauss: &[
        0.202_578_241_925_561_272_880_620_2,
        0.198_431_485_327_111_576_456_118_3,
        0.186_161_000_015_562_211_026_800_6,
        0.166_269_205_816_993_933_553_200_9,
        0.139_570_677_926_154_314_447_804_8,
        0.107_159_220_467_171_935_011_869_5,
        0.070_366_047_488_108_124_709_267_42,
        0.030_753_241_996_117_268_354_628_39,
    ],
};

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(table: &KronrodTable, f: impl Fn(f64) -> f64) -> (f64, f64) {
        let mut k = table.kronrod[0] * f(0.0);
        let mut g = table.gauss[0] * f(0.0);
        for i in 1..table.nodes.len() {
            let x = table.nodes[i];
            let s = f(x) + f(-x);
            k += table.kronrod[i] * s;
            if i % 2 == 0 {
                g += table.gauss[i / 2] * s;
            }
        }
        (k, g)
    }

    fn check_exactness(table: &KronrodTable, kronrod_degree: u32, gauss_degree: u32) {
        for d in 0..=kronrod_degree {
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / f64::from(d + 1) };
            let (k, g) = apply(table, |x| x.powi(d as i32));
            assert!((k - exact).abs() < 2e-15, "Kronrod degree {d}: {k} vs {exact}");
            if d <= gauss_degree {
                assert!((g - exact).abs() < 2e-15, "Gauss degree {d}: {g} vs {exact}");
            }
        }
    }

    #[test]
    fn gk15_exact_for_polynomials() {
        check_exactness(&GK15, 22, 13);
    }

    #[test]
    fn gk31_exact_for_polynomials() {
        check_exactness(&GK31, 46, 29);
    }
}
