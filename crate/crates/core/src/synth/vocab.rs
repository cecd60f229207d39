use crate::taxonomy::AppCategory;

const BROWSER: &[&str] = &[
    "com.android.chrome",
    "org.mozilla.firefox",
    "com.android.email",
    "com.google.android.googlequicksearchbox",
    "com.yahoo.mobile.client.android.mail",
];

const SOCIAL: &[&str] = &[
    "com.facebook.katana",
    "com.twitter.android",
    "com.whatsapp",
    "com.skype.raider",
    "com.viber.voip",
    "com.pinterest",
    "flipboard.app",
    "com.dropbox.android",
    "com.google.android.gtalk",
    "com.localphone.app",
    "com.mobilevoip.dialer",
];

const UTILITY: &[&str] = &[
    "com.google.android.calendar",
    "com.google.android.apps.maps",
    "com.navigator.gps",
    "com.android.deskclock",
    "com.weather.forecast",
    "com.evernote",
    "com.tripadvisor.tripadvisor",
    "com.qrcode.reader",
    "com.android.calculator2",
    "com.scanner.docs",
    "com.flashlight.led",
    "com.voice.recorder",
    "com.recipes.app",
    "com.android.camera",
    "com.amazon.shopping",
];

const ENTERTAINMENT: &[&str] = &[
    "com.google.android.youtube",
    "com.spotify.music",
    "com.audible.book",
    "com.fm.radio",
    "com.tvguide.mobile",
    "com.guitar.tuner",
    "com.mxtech.videoplayer",
    "com.bbc.news",
    "com.netflix.stream",
];

const GAME: &[&str] = &[
    "com.king.candycrushsaga",
    "com.halfbrick.fruitninja",
    "com.rovio.angrybirds",
    "com.solitaire.cards",
    "com.puzzle.sudoku",
    "com.zynga.wordgame",
];

/// Apps the bundled taxonomy leaves uncategorized.
pub const UNKNOWN_APPS: &[&str] = &[
    "com.vendor.tool",
    "com.corp.vpn",
    "com.bank.mobile",
    "com.corp.timesheet",
];

pub fn category_apps(c: AppCategory) -> &'static [&'static str] {
    match c {
        AppCategory::Browser => BROWSER,
        AppCategory::SocialNetworking => SOCIAL,
        AppCategory::Utility => UTILITY,
        AppCategory::Entertainment => ENTERTAINMENT,
        AppCategory::Game => GAME,
        AppCategory::Unknown => UNKNOWN_APPS,
    }
}

pub(crate) fn pool() -> Vec<(AppCategory, &'static str)> {
    super::all_categories()
        .into_iter()
        .flat_map(|c| category_apps(c).iter().map(move |&a| (c, a)))
        .collect()
}
