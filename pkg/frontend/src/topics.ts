// MQTT-style topic filter matching, mirroring the server's grammar:
// '+' matches one level, a trailing '#' matches the rest (including none).

export function topicMatches(filter: string, topic: string): boolean {
  const f = filter.split("/");
  const t = topic.split("/");
  let i = 0;
  while (i < f.length) {
    if (f[i] === "#") return i === f.length - 1 && t.length >= i;
    if (i >= t.length) return false;
    if (f[i] !== "+" && f[i] !== t[i]) return false;
    i++;
  }
  return i === t.length;
}

export function validFilter(filter: string): boolean {
  if (!filter) return false;
  const levels = filter.split("/");
  return levels.every((level, i) => {
    if (!level) return false;
    if (level === "#") return i === levels.length - 1;
    if (level.includes("#")) return false;
    if (level !== "+" && level.includes("+")) return false;
    return true;
  });
}
