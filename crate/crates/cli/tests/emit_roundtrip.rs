//! Property test: the CSV float rendering round-trips every finite f64
//! bit-for-bit.

use geogame_cli::report::format_f64;
use proptest::prelude::*;

proptest! {
    #[test]
    fn rendered_floats_parse_back_bitwise(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let parsed: f64 = format_f64(x).parse().unwrap();
        prop_assert_eq!(parsed.to_bits(), x.to_bits());
    }

    #[test]
    fn rendered_floats_parse_back_in_report_range(x in -1e9f64..1e9) {
        let parsed: f64 = format_f64(x).parse().unwrap();
        prop_assert_eq!(parsed.to_bits(), x.to_bits());
    }
}
