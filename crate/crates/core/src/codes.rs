//! Categorical attributes and their numeric risk codes.

/// A categorical attribute with a fixed numeric code per category.
pub trait Coded: Copy + Eq + Sized + 'static {
    /// Every category, in ascending code order.
    const ALL: &'static [Self];

    fn code(self) -> f64;

    /// Lowercase name used in configuration files and on the command line.
    fn label(self) -> &'static str;

    fn from_code(code: f64) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.code() == code)
    }

    fn from_label(label: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.label() == label)
    }

    fn max_code() -> f64 {
        Self::ALL.iter().map(|c| c.code()).fold(f64::MIN, f64::max)
    }

    fn min_code() -> f64 {
        Self::ALL.iter().map(|c| c.code()).fold(f64::MAX, f64::min)
    }
}

macro_rules! coded_enum {
    (
        $(#[$meta:meta])*
        $name:ident { $($variant:ident = $code:literal, $label:literal;)+ }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant,)+
        }

        impl $crate::codes::Coded for $name {
            const ALL: &'static [Self] = &[$($name::$variant,)+];

            fn code(self) -> f64 {
                match self {
                    $($name::$variant => $code,)+
                }
            }

            fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label,)+
                }
            }
        }
    };
}

pub(crate) use coded_enum;

/// Format a code the way population and result files store it.
pub fn format_code(code: f64) -> String {
    if code.fract() == 0.0 {
        format!("{code:.1}")
    } else {
        format!("{code}")
    }
}
