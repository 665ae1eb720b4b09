//! Planar static-walk simulation. (under construction)
