//! SVG plot emission. (under construction)
