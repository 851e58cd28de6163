//! Built-in registry of the seventy CPI components the pricing models draw
//! from, keyed by acronym. Series data is supplied separately through a
//! catalog manifest; this table only fixes what each acronym means.

/// `(acronym, description)`, sorted by acronym.
pub static REGISTRY: &[(&str, &str)] = &[
    ("A", "apparel"),
    ("AB", "alcoholic beverages"),
    ("APL", "appliances"),
    ("C", "CPI"),
    ("CC", "core CPI"),
    ("CE", "CPI less energy"),
    ("CF", "CPI less food"),
    ("CFSH", "CPI less food and shelter"),
    ("CFSHE", "CPI less food shelter and energy"),
    ("CM", "CPI less medcare"),
    ("CO", "communication"),
    ("COMM", "commodities"),
    ("CSH", "CPI less shelter"),
    ("DIAR", "dairy products"),
    ("DUR", "durables"),
    ("E", "energy"),
    ("EC", "education and communication"),
    ("ED", "education"),
    ("F", "food and beverages"),
    ("FB", "food less beverages"),
    ("FISH", "fish"),
    ("FOOT", "footwear"),
    ("FOTO", "photography"),
    ("FRUI", "fruits and vegetables"),
    ("FS", "financial services"),
    ("FU", "fuels and utilities (housing)"),
    ("H", "housing"),
    ("HFO", "household furnishing and operations"),
    ("HO", "household operations"),
    ("HOSP", "hospital services"),
    ("HS", "housekeeping supplies"),
    ("ITR", "intracity transportation"),
    ("JEW", "jewelry and watches"),
    ("LS", "legal services"),
    ("M", "medical care"),
    ("MAP", "men's and boy's apparel"),
    ("MCC", "medical care commodities"),
    ("MCS", "medical care services"),
    ("MEAT", "meats, poultry, and fish"),
    ("MF", "motor fuel"),
    ("MISG", "miscellaneous goods"),
    ("MISS", "miscellaneous services"),
    ("MVI", "motor vehicle insurance"),
    ("MVP", "motor vehicle parts"),
    ("MVR", "motor vehicle repairs"),
    ("NC", "new cars"),
    ("NDUR", "nondurables"),
    ("O", "other goods and services"),
    ("ORG", "other recreation goods"),
    ("OS", "other services"),
    ("PC", "personal care"),
    ("PDRUG", "prescription drugs"),
    ("PETS", "pets and related goods"),
    ("R", "recreation"),
    ("RENT", "rent"),
    ("RPR", "rent primary residence"),
    ("RRM", "recreational reading materials"),
    ("RS", "recreation services"),
    ("SEFV", "food away from home"),
    ("SERV", "services"),
    ("SH", "shelter"),
    ("SPO", "sporting goods (apparel)"),
    ("T", "transportation"),
    ("TOB", "tobacco"),
    ("TPR", "private transportation"),
    ("TPU", "public transportation"),
    ("TS", "transportation services"),
    ("TUIT", "tuition"),
    ("VAA", "video and audio"),
    ("WAP", "women's and girl's apparel"),
];

/// Description of a registered acronym.
pub fn describe(acronym: &str) -> Option<&'static str> {
    REGISTRY
        .binary_search_by(|(a, _)| (*a).cmp(acronym))
        .ok()
        .map(|i| REGISTRY[i].1)
}
